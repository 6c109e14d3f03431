"""Exact null rejection rates of the conventional Wald t-test.

Conditional on the first-stage t statistic ``t1``, the event ``|t_W| >= z`` is
a quadratic inequality in the AR statistic, and ``t_AR | t1`` is normal with
mean ``rho * (t1 - lambda)`` and variance ``1 - rho^2``. The rejection rate is
therefore a one-dimensional Gaussian-weighted integral over ``t1``, optionally
restricted to ``t1 >= c`` (``c = 0`` gives sign screening).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .model import DesignPoint, ParameterError
from .stats import (
    IntegrationError,
    QuadratureSpec,
    find_root,
    integrate_normal_weighted,
    norm_cdf,
    norm_ppf,
)

__all__ = [
    "EF_MAX",
    "GridResult",
    "RejectionQuery",
    "RejectionRegion",
    "conditional_rejection_prob",
    "default_ef_grid",
    "default_rho_grid",
    "endogeneity_cutoff",
    "rejection_grid",
    "rejection_rate",
    "rejection_region_bounds",
    "worst_case_rejection",
]

EF_MAX = 1e4
RHO_CAP = 0.999
CUTOFF_TOL = 1e-3


@dataclass(frozen=True)
class RejectionQuery:
    """A rejection-rate request.

    ``screen`` is the first-stage threshold ``c``: ``-inf`` for the
    unconditional rate, ``0`` for the rate conditional on ``pi_hat > 0``.
    """

    design: DesignPoint
    alpha: float = 0.05
    screen: float = -math.inf

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class RejectionRegion:
    """Set of AR statistics at which the Wald test rejects, given ``t1``.

    ``kind`` is ``"empty"``, ``"interval"`` (reject on ``[lower, upper]``) or
    ``"complement"`` (reject on ``t_AR <= lower`` or ``t_AR >= upper``).
    """

    kind: str
    lower: float = math.nan
    upper: float = math.nan

    def contains(self, t_ar):
        t_ar = np.asarray(t_ar)
        if self.kind == "empty":
            return np.zeros(t_ar.shape, dtype=bool)
        if self.kind == "interval":
            return (t_ar >= self.lower) & (t_ar <= self.upper)
        return (t_ar <= self.lower) | (t_ar >= self.upper)


def _critical_value(alpha):
    return float(norm_ppf(1.0 - alpha / 2.0))


def _region_arrays(t1, rho, z):
    # Roots of (t1^2 - z^2) x^2 + 2 rho z^2 t1 x - z^2 t1^2 = 0, computed in the
    # cancellation-free form so the finite root stays accurate as t1^2 -> z^2.
    t1 = np.asarray(t1, dtype=float)
    z2 = z * z
    a = t1 * t1 - z2
    h = rho * z2 * t1
    inner = t1 * t1 - (1.0 - rho * rho) * z2
    empty = inner <= 0
    sqrt_d = np.abs(t1) * z * np.sqrt(np.where(empty, 0.0, inner))
    q = -(h + np.where(h >= 0, sqrt_d, -sqrt_d))
    with np.errstate(divide="ignore", invalid="ignore"):
        r_small = np.where(empty, 0.0, -z2 * t1 * t1 / np.where(q == 0, 1.0, q))
        r_big = np.where(empty, 0.0, q / a)
    lower = np.minimum(r_small, r_big)
    upper = np.maximum(r_small, r_big)
    complement = (~empty) & (a >= 0)
    return empty, complement, lower, upper


def rejection_region_bounds(t1, rho, alpha=0.05):
    """Classify the Wald rejection region in terms of ``t_AR`` given ``t1``.

    Returns a :class:`RejectionRegion`. At ``t1^2 == z^2`` one endpoint is
    infinite; that boundary has probability zero under the integral.
    """
    if not abs(rho) < 1:
        raise ParameterError(f"|rho| must be < 1, got {rho}")
    z = _critical_value(alpha)
    empty, complement, lower, upper = _region_arrays(float(t1), rho, z)
    if empty:
        return RejectionRegion("empty")
    kind = "complement" if complement else "interval"
    return RejectionRegion(kind, float(lower), float(upper))


def _interval_mass(a, b):
    # P(a <= N(0,1) <= b) without cancellation in either tail
    return np.where(a > 0, special.ndtr(-a) - special.ndtr(-b), special.ndtr(b) - special.ndtr(a))


def _conditional_rejection(t1, lam, rho, z):
    empty, complement, lower, upper = _region_arrays(t1, rho, z)
    m = rho * (np.asarray(t1) - lam)
    sd = math.sqrt(1.0 - rho * rho)
    lo = (lower - m) / sd
    hi = (upper - m) / sd
    inside = _interval_mass(lo, hi)
    outside = special.ndtr(lo) + special.ndtr(-hi)
    p = np.where(empty, 0.0, np.where(complement, outside, inside))
    return np.clip(p, 0.0, 1.0)


def conditional_rejection_prob(t1, design, alpha=0.05):
    """``P(|t_W| >= z | t1)`` for the given design.

    Works elementwise on arrays of ``t1``.
    """
    p = _conditional_rejection(t1, design.lam, design.rho, _critical_value(alpha))
    return p[()] if np.ndim(p) == 0 else p


def _rate_spec(rho, z, spec):
    c = z * math.sqrt(1.0 - rho * rho)
    return (spec or QuadratureSpec(abs_tol=1e-11, rel_tol=1e-9)).with_breakpoints(-z, -c, 0.0, c, z)


def rejection_rate(q, spec=None):
    """Null rejection rate of the two-sided Wald test, optionally screened.

    With ``q.screen = -inf`` this is the unconditional rate; with
    ``q.screen = c`` it is the rate conditional on ``t1 >= c``.
    """
    d = q.design
    lam, rho = d.lam, d.rho
    z = _critical_value(q.alpha)
    mass = norm_cdf(lam - q.screen)
    if mass <= 0:
        raise ParameterError("screening threshold leaves no probability mass")
    total = integrate_normal_weighted(
        lambda t: _conditional_rejection(t, lam, rho, z),
        lower=q.screen,
        upper=math.inf,
        center=lam,
        spec=_rate_spec(rho, z, spec),
    )
    return min(max(total / mass, 0.0), 1.0)


def _rate(ef, rho, alpha, screen):
    return rejection_rate(RejectionQuery(DesignPoint(ef, rho), alpha, screen))


def worst_case_rejection(rho, alpha=0.05, screen=-math.inf, ef_max=EF_MAX, n_grid=61):
    """Largest rejection rate over ``E[F]`` in ``[1, ef_max]`` at fixed ``rho``.

    A log-spaced grid locates the best cell, which is then refined with a
    bounded scalar search on ``log(E[F])``.

    Returns
    -------
    (rate, ef) : tuple of float
    """
    if not abs(rho) < 1:
        raise ParameterError(f"|rho| must be < 1, got {rho}")
    log_grid = np.linspace(0.0, math.log(ef_max), n_grid)
    rates = np.array([_rate(math.exp(u), rho, alpha, screen) for u in log_grid])
    i = int(np.argmax(rates))
    best_rate, best_u = float(rates[i]), float(log_grid[i])
    lo = log_grid[max(i - 1, 0)]
    hi = log_grid[min(i + 1, n_grid - 1)]
    res = optimize.minimize_scalar(
        lambda u: -_rate(math.exp(u), rho, alpha, screen),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-6},
    )
    if -res.fun > best_rate:
        best_rate, best_u = float(-res.fun), float(res.x)
    return best_rate, math.exp(best_u)


def endogeneity_cutoff(target_rate, alpha=0.05, screen=-math.inf, ef_max=EF_MAX, tol=CUTOFF_TOL):
    """Largest ``|rho|`` whose worst-case rejection rate stays below target.

    The worst case over ``E[F]`` increases with ``|rho|``, so the cutoff is the
    root of ``rho -> worst_case_rejection(rho) - target_rate`` on
    ``[0, RHO_CAP]``.
    """
    if not target_rate >= alpha:
        raise ParameterError("target rate must be at least the nominal level")

    def excess(rho):
        return worst_case_rejection(rho, alpha, screen, ef_max)[0] - target_rate

    top = excess(RHO_CAP)
    if top <= 0:
        return RHO_CAP
    bottom = excess(0.0)
    if bottom > 0:
        raise ParameterError("target rate is below the attainable minimum")
    return find_root(excess, 0.0, RHO_CAP, x_tolerance=tol)


@dataclass
class GridResult:
    """Rectangular sweep over ``(E[F], rho)`` with one value per cell.

    ``values[i, j]`` belongs to ``ef_values[i]`` and ``rho_values[j]``; failed
    cells hold NaN and are listed in ``failures``.
    """

    ef_values: np.ndarray
    rho_values: np.ndarray
    values: np.ndarray
    name: str = "rate"
    failures: list = None

    def rows(self):
        """Yield ``(ef, rho, value)`` sorted by ``ef`` then ``rho``."""
        for i in np.argsort(self.ef_values, kind="stable"):
            for j in np.argsort(self.rho_values, kind="stable"):
                yield float(self.ef_values[i]), float(self.rho_values[j]), float(self.values[i, j])


def default_ef_grid(ef_min=1.0, ef_max=EF_MAX, steps=20):
    return np.geomspace(ef_min, ef_max, steps)


def default_rho_grid(rho_max=RHO_CAP, steps=41):
    return np.linspace(-rho_max, rho_max, steps)


def rejection_grid(ef_values, rho_values, alpha=0.05, screen=-math.inf, spec=None):
    """Rejection rate on every ``(E[F], rho)`` cell; cells are independent."""
    ef_values = np.asarray(ef_values, dtype=float)
    rho_values = np.asarray(rho_values, dtype=float)
    values = np.full((ef_values.size, rho_values.size), np.nan)
    failures = []
    for i, ef in enumerate(ef_values):
        for j, rho in enumerate(rho_values):
            try:
                q = RejectionQuery(DesignPoint(float(ef), float(rho)), alpha, screen)
                values[i, j] = rejection_rate(q, spec)
            except (IntegrationError, ParameterError) as exc:
                failures.append((float(ef), float(rho), str(exc)))
    return GridResult(ef_values, rho_values, values, "rate", failures)
