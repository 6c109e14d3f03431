"""Monte Carlo oracle for the normal just-identified IV model.

Draws ``(delta_hat, pi_hat)`` directly from the bivariate normal law and pushes
them through the estimators in :mod:`justiv.estimators`. Nothing here uses the
quadrature code, so agreement between the two is a genuine cross-check.

Reproducibility: draws are generated in fixed-size blocks, and block ``k`` is
driven by a Philox counter-based generator keyed on ``(seed, k)``. The stream
is therefore identical whether blocks are produced serially or spread across
any number of workers.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .estimators import ar_t, iv_estimate, unbiased_estimate, wald_t
from .model import ModelParams, ParameterError, ReducedFormDraw
from .stats import norm_ppf

__all__ = [
    "BLOCK_SIZE",
    "McEstimate",
    "SimulationPlan",
    "SimulationReport",
    "iter_blocks",
    "mc_bias_report",
    "mc_rejection_rate",
    "mc_scaled_cdf",
    "sample_draws",
    "scaled_estimates",
]

BLOCK_SIZE = 1 << 16
_SCREENS = ("none", "positive", "negative")


@dataclass(frozen=True)
class SimulationPlan:
    """What to simulate.

    Attributes
    ----------
    model : ModelParams
    n_draws : int
        Number of draws before screening.
    seed : int
        Unsigned 64-bit seed; fully determines the stream.
    screen : {"none", "positive", "negative"}
        Keep all draws, only ``t1 > 0``, or only ``t1 < 0``.
    """

    model: ModelParams
    n_draws: int = 200_000
    seed: int = 1
    screen: str = "none"

    def __post_init__(self):
        if self.n_draws < 1:
            raise ParameterError("n_draws must be positive")
        if not 0 <= self.seed < 2**64:
            raise ParameterError("seed must be an unsigned 64-bit integer")
        if self.screen not in _SCREENS:
            raise ParameterError(f"screen must be one of {_SCREENS}, got {self.screen!r}")


@dataclass(frozen=True)
class McEstimate:
    value: float
    se: float
    n: int


@dataclass(frozen=True)
class SimulationReport:
    n_draws: int
    n_kept: int
    n_dropped: int
    rejection_rate_wald: McEstimate
    median_scaled_iv: float
    median_scaled_u: float
    mean_scaled_u: McEstimate
    empirical_corr_tar_t1: float

    def as_record(self):
        return {
            "n_draws": self.n_draws,
            "n_kept": self.n_kept,
            "n_dropped": self.n_dropped,
            "rejection_rate": self.rejection_rate_wald.value,
            "rejection_rate_se": self.rejection_rate_wald.se,
            "median_scaled_iv": self.median_scaled_iv,
            "median_scaled_u": self.median_scaled_u,
            "mean_scaled_u": self.mean_scaled_u.value,
            "mean_scaled_u_se": self.mean_scaled_u.se,
            "corr_tar_t1": self.empirical_corr_tar_t1,
        }


def _block(model, seed, k, size):
    rng = np.random.Generator(np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, k]))
    e = rng.standard_normal((2, size))
    # lower Cholesky factor of the covariance, delta_hat first
    l21 = model.cov_rf / model.sd_delta
    l22 = math.sqrt(model.sd_pi**2 - l21 * l21)
    delta = model.pi * model.beta + model.sd_delta * e[0]
    pi = model.pi + l21 * e[0] + l22 * e[1]
    return delta, pi


def _block_sizes(n):
    full, rest = divmod(n, BLOCK_SIZE)
    return [BLOCK_SIZE] * full + ([rest] if rest else [])


def _workers():
    try:
        return max(1, int(os.environ.get("JUSTIV_WORKERS", "1")))
    except ValueError:
        return 1


def iter_blocks(plan, workers=None):
    """Yield screened :class:`ReducedFormDraw` blocks in a fixed order."""
    sizes = _block_sizes(plan.n_draws)
    m = plan.model

    def make(k):
        delta, pi = _block(m, plan.seed, k, sizes[k])
        if plan.screen == "positive":
            keep = pi > 0
            delta, pi = delta[keep], pi[keep]
        elif plan.screen == "negative":
            keep = pi < 0
            delta, pi = delta[keep], pi[keep]
        return ReducedFormDraw.from_model(m, delta, pi)

    workers = workers or _workers()
    if workers == 1:
        for k in range(len(sizes)):
            yield make(k)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            yield from pool.map(make, range(len(sizes)))


def sample_draws(plan, workers=None):
    """All screened draws of a plan as one array-valued :class:`ReducedFormDraw`."""
    blocks = list(iter_blocks(plan, workers))
    delta = np.concatenate([b.delta_hat for b in blocks])
    pi = np.concatenate([b.pi_hat for b in blocks])
    return ReducedFormDraw.from_model(plan.model, delta, pi)


def _nonzero_first_stage(draws):
    keep = draws.pi_hat != 0
    dropped = int(keep.size - keep.sum())
    if dropped:
        draws = ReducedFormDraw(
            draws.delta_hat[keep], draws.pi_hat[keep], draws.sd_delta, draws.sd_pi, draws.cov_rf
        )
    return draws, dropped


def _proportion(hits):
    n = hits.size
    if n == 0:
        raise ParameterError("no draws survived screening")
    p = float(hits.mean())
    return McEstimate(p, math.sqrt(max(p * (1.0 - p), 1.0 / n) / n), n)


def mc_rejection_rate(plan, alpha=0.05, workers=None):
    """Frequency of ``|t_W| >= z_{1-alpha/2}`` at the true ``beta``."""
    draws, _ = _nonzero_first_stage(sample_draws(plan, workers))
    z = float(norm_ppf(1.0 - alpha / 2.0))
    return _proportion(np.abs(wald_t(draws, plan.model.beta)) >= z)


def scaled_estimates(draws, model):
    """Relative IV and unbiased estimates, ``(b - beta) / |beta_wols - beta|``."""
    ovb = abs(model.beta_wols - model.beta)
    if ovb == 0:
        raise ParameterError("relative bias needs rho != 0 (beta_wols == beta)")
    return (iv_estimate(draws) - model.beta) / ovb, (unbiased_estimate(draws) - model.beta) / ovb


def mc_scaled_cdf(plan, xs, estimator="iv", workers=None):
    """Empirical CDF of a relative estimator at each point of ``xs``."""
    draws, _ = _nonzero_first_stage(sample_draws(plan, workers))
    b_iv, b_u = scaled_estimates(draws, plan.model)
    b = b_iv if estimator == "iv" else b_u
    return [_proportion(b <= x) for x in xs]


def mc_bias_report(plan, alpha=0.05, workers=None):
    """Empirical rejection rate, relative medians and mean, and corr(t_AR, t1)."""
    raw = sample_draws(plan, workers)
    draws, dropped = _nonzero_first_stage(raw)
    n = draws.pi_hat.size
    if n == 0:
        raise ParameterError("no draws survived screening")
    m = plan.model
    z = float(norm_ppf(1.0 - alpha / 2.0))
    reject = _proportion(np.abs(wald_t(draws, m.beta)) >= z)
    if m.beta_wols == m.beta:
        # rho = 0: relative bias is undefined
        med_iv = med_u = mean_u = se_u = math.nan
    else:
        b_iv, b_u = scaled_estimates(draws, m)
        med_iv, med_u = float(np.median(b_iv)), float(np.median(b_u))
        mean_u = float(b_u.mean())
        se_u = float(b_u.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan
    corr = float(np.corrcoef(ar_t(draws, m.beta), draws.t1)[0, 1]) if n > 1 else math.nan
    return SimulationReport(
        n_draws=plan.n_draws,
        n_kept=n,
        n_dropped=dropped,
        rejection_rate_wald=reject,
        median_scaled_iv=med_iv,
        median_scaled_u=med_u,
        mean_scaled_u=McEstimate(mean_u, se_u, n),
        empirical_corr_tar_t1=corr,
    )
