"""Quadrature-versus-Monte-Carlo cross-validation on a grid of designs."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bias import BiasQuery, median_bias_exact, scaled_cdf
from .estimators import wald_t
from .model import DesignPoint, canonical_model
from .oracle import SimulationPlan, _nonzero_first_stage, sample_draws, scaled_estimates
from .rejection import RejectionQuery, rejection_rate
from .stats import norm_ppf

__all__ = ["Check", "VERIFY_EF", "VERIFY_RHO", "VERIFY_X", "run_verification"]

VERIFY_EF = (1.0, 2.0, 4.0, 10.0, 100.0)
VERIFY_RHO = (-0.9, -0.4, 0.1, 0.5, 0.95)
VERIFY_X = (0.0, 0.25, 1.0)


@dataclass(frozen=True)
class Check:
    statistic: str
    ef: float
    rho: float
    exact: float
    simulated: float
    se: float
    tolerance: float

    @property
    def margin(self):
        """Discrepancy in standard errors."""
        return abs(self.exact - self.simulated) / self.se

    @property
    def passed(self):
        return self.margin <= self.tolerance

    def as_record(self):
        return {
            "statistic": self.statistic,
            "ef": self.ef,
            "rho": self.rho,
            "exact": self.exact,
            "simulated": self.simulated,
            "se": self.se,
            "margin": self.margin,
            "passed": int(self.passed),
        }


def _point_seed(seed, i, j):
    return int(np.random.SeedSequence([seed, i, j]).generate_state(1, np.uint64)[0])


def _binomial_se(p, n):
    return math.sqrt(max(p * (1.0 - p), 1.0 / n) / n)


def _checks_at(ef, rho, n_draws, seed, alpha, tolerance):
    design = DesignPoint(ef, rho)
    model = canonical_model(design)
    z = float(norm_ppf(1.0 - alpha / 2.0))
    all_draws, _ = _nonzero_first_stage(sample_draws(SimulationPlan(model, n_draws, seed)))
    b_iv_all, b_u_all = scaled_estimates(all_draws, model)
    reject_all = np.abs(wald_t(all_draws, model.beta)) >= z
    positive = all_draws.pi_hat > 0

    out = []

    def add(name, exact, sim, se):
        out.append(Check(name, ef, rho, float(exact), float(sim), float(se), tolerance))

    for label, mask, screen in (("", slice(None), -math.inf), ("screened_", positive, 0.0)):
        hits = reject_all[mask]
        n = hits.size
        p = hits.mean()
        exact = rejection_rate(RejectionQuery(design, alpha, screen))
        add(f"{label}rejection_rate", exact, p, _binomial_se(p, n))

    variants = (
        ("iv", "unconditional", b_iv_all),
        ("iv", "screened", b_iv_all[positive]),
        ("u", "screened", b_u_all[positive]),
    )
    for est, cond, sample in variants:
        q = BiasQuery(design, est, cond)
        n = sample.size
        for x in VERIFY_X:
            p = float(np.mean(sample <= x))
            add(f"{est}_{cond}_cdf@{x:g}", scaled_cdf(x, q), p, _binomial_se(p, n))
        # the simulated median should sit at the exact CDF's 1/2 point
        m_sim = float(np.median(sample))
        add(f"{est}_{cond}_median_cdf", scaled_cdf(m_sim, q), 0.5, math.sqrt(0.25 / n))
    return out


def run_verification(
    ef_values=VERIFY_EF, rho_values=VERIFY_RHO, n_draws=200_000, seed=1, alpha=0.05, tolerance=3.0
):
    """Compare every exact quantity with its simulated counterpart.

    For each ``(E[F], rho)`` the checks are the unconditional and screened
    rejection rates, the relative-estimator CDFs at ``VERIFY_X`` (IV
    unconditional and screened, unbiased estimator screened), and the medians
    of the same three laws. A median is checked by evaluating the exact CDF at
    the simulated median, which should be ``1/2`` up to ``sqrt(1/(4n))``.

    Returns
    -------
    list of Check
    """
    checks = []
    for i, ef in enumerate(ef_values):
        for j, rho in enumerate(rho_values):
            checks.extend(_checks_at(float(ef), float(rho), n_draws, _point_seed(seed, i, j), alpha, tolerance))
    return checks


def exact_medians(design):
    """Exact relative medians of the three laws used in verification."""
    return {
        f"{est}_{cond}": median_bias_exact(BiasQuery(design, est, cond))
        for est, cond in (("iv", "unconditional"), ("iv", "screened"), ("u", "screened"))
    }
