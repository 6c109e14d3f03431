"""Mean and median bias of the IV and sign-restricted unbiased estimators.

Biases are relative: the estimator minus ``beta``, divided by the weak-IV
omitted-variables bias of OLS, ``|beta_wols - beta|``. In those units the
scaled IV estimator is ``t_AR / (|rho| t1)`` and its distribution depends only
on ``(lambda, rho)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .model import DesignPoint, ParameterError
from .stats import (
    BracketError,
    IntegrationError,
    QuadratureSpec,
    find_root,
    integrate_normal_weighted,
    mills_ratio,
    norm_cdf,
    norm_pdf,
)

__all__ = [
    "BiasQuery",
    "SCREENED_BOUND_MIN_LAMBDA",
    "bias_band",
    "bias_curve",
    "bias_ratio_conditional_to_unconditional",
    "betau_mean_bias",
    "bound_is_supremum",
    "default_band_rho_grid",
    "iv_median_bias_bound",
    "median_bias_exact",
    "median_to_mean_bias_ratio",
    "scaled_iv_cdf",
    "scaled_u_cdf",
]

SQRT_HALF_PI = math.sqrt(math.pi / 2.0)
# the screened closed form is a supremum over rho only from here on
SCREENED_BOUND_MIN_LAMBDA = 0.84

_CONDITIONING = {
    "unconditional": (-math.inf, math.inf),
    "screened": (0.0, math.inf),
    "wrong-signed": (-math.inf, 0.0),
}
_MEDIAN_SPEC = QuadratureSpec(abs_tol=1e-11, rel_tol=1e-9)


def betau_mean_bias(lam, side="positive"):
    """Relative mean bias of the unbiased estimator given the sign of ``t1``.

    Parameters
    ----------
    lam : float
        ``sqrt(E[F] - 1)``.
    side : {"positive", "negative"}
        Condition on ``t1 > 0`` or ``t1 < 0``.
    """
    if lam < 0:
        raise ParameterError("lambda must be non-negative")
    if side == "positive":
        return SQRT_HALF_PI * norm_pdf(lam) / norm_cdf(lam)
    if side == "negative":
        # phi / (1 - Phi) = 1 / mills, stable for large lambda
        return -SQRT_HALF_PI / mills_ratio(lam)
    raise ValueError(f"side must be 'positive' or 'negative', got {side!r}")


def iv_median_bias_bound(lam, screened=False):
    """Limit of relative median IV bias as ``|rho| -> 0``.

    Unscreened this is also the supremum over ``rho``. Screened on
    ``pi_hat > 0`` it is the supremum only for ``lambda >= 0.84``; see
    :func:`bound_is_supremum`.
    """
    if lam < 0:
        raise ParameterError("lambda must be non-negative")
    pdf = norm_pdf(lam)
    if screened:
        return pdf / (lam * norm_cdf(lam) + pdf)
    return pdf / (lam * (norm_cdf(lam) - 0.5) + pdf)


def bound_is_supremum(lam, screened):
    return (not screened) or lam >= SCREENED_BOUND_MIN_LAMBDA


def bias_ratio_conditional_to_unconditional(lam):
    """Screened over unscreened median-bias bound."""
    return 1.0 - 0.5 * lam / (lam * norm_cdf(lam) + norm_pdf(lam))


def median_to_mean_bias_ratio(lam):
    """Screened IV median-bias bound over the screened mean bias of ``beta_U``."""
    cdf = norm_cdf(lam)
    return math.sqrt(2.0 / math.pi) * cdf / (lam * cdf + norm_pdf(lam))


def _check_design(design):
    if design.rho == 0:
        raise ParameterError("relative bias is undefined at rho = 0")


def _iv_argument(t1, x, lam, s):
    slope = 1.0 - math.copysign(1.0, s) * x
    return s * (np.sign(t1) * lam - slope * np.abs(t1))


def _u_argument(t1, x, lam, s):
    slope = 1.0 - math.copysign(1.0, s) * x
    return s * (lam - slope / mills_ratio(t1))


_ARGUMENTS = {"iv": _iv_argument, "u": _u_argument}


def _limits(conditioning):
    try:
        return _CONDITIONING[conditioning]
    except KeyError:
        raise ValueError(f"unknown conditioning {conditioning!r}") from None


def _conditioning_from_screen(c):
    # screen threshold c: -inf -> unconditional, 0 -> t1 > 0
    if c == -math.inf:
        return "unconditional"
    if c == 0:
        return "screened"
    raise ValueError("screen threshold must be -inf or 0")


def _mass(lam, conditioning):
    lo, hi = _limits(conditioning)
    if conditioning == "wrong-signed":
        return norm_cdf(-lam)
    return norm_cdf(lam - lo)


def _centered_cdf(x, design, estimator, conditioning, spec=None, scaled=False):
    # P(scaled estimator <= x | conditioning) - 1/2. The 1/2 is taken out of the
    # integrand so that tiny |s| keeps full relative precision; with scaled=True
    # the result is additionally divided by |s| (same sign, used for root finding).
    _check_design(design)
    lam, s = design.lam, design.s
    arg = _ARGUMENTS[estimator]
    lo, hi = _limits(conditioning)
    div = abs(s) if scaled else 1.0

    def integrand(t1):
        return 0.5 * special.erf(arg(t1, x, lam, s) * math.sqrt(0.5)) / div

    total = integrate_normal_weighted(
        integrand, lo, hi, center=lam, spec=(spec or _MEDIAN_SPEC).with_breakpoints(0.0)
    )
    return total / _mass(lam, conditioning)


def scaled_iv_cdf(x, design, c=-math.inf, spec=None):
    """CDF of the relative IV estimator, unconditional or given ``t1 >= 0``.

    Parameters
    ----------
    x : float
    design : DesignPoint
        Must have ``rho != 0``.
    c : float
        ``-inf`` for the unconditional law, ``0`` for sign screening.
    """
    cond = _conditioning_from_screen(c)
    return 0.5 + _centered_cdf(x, design, "iv", cond, spec)


def scaled_u_cdf(x, design, c=-math.inf, spec=None):
    """CDF of the relative unbiased estimator; see :func:`scaled_iv_cdf`."""
    if x == math.inf:
        return 1.0
    cond = _conditioning_from_screen(c)
    return 0.5 + _centered_cdf(x, design, "u", cond, spec)


@dataclass(frozen=True)
class BiasQuery:
    design: DesignPoint
    estimator: str = "iv"
    conditioning: str = "unconditional"

    def __post_init__(self):
        if self.estimator not in _ARGUMENTS:
            raise ValueError(f"estimator must be 'iv' or 'u', got {self.estimator!r}")
        _limits(self.conditioning)


def scaled_cdf(x, q, spec=None):
    """CDF of the relative estimator named in a :class:`BiasQuery`."""
    return 0.5 + _centered_cdf(x, q.design, q.estimator, q.conditioning, spec)


def median_bias_exact(q, x_tolerance=1e-10, max_bracket=64.0):
    """Relative median bias, solved numerically from the exact CDF.

    The bracket starts at ``[-2, 2]`` and doubles until it contains a sign
    change or exceeds ``max_bracket``.
    """
    _check_design(q.design)

    def g(x):
        return _centered_cdf(x, q.design, q.estimator, q.conditioning, scaled=True)

    width = 2.0
    while True:
        g_lo, g_hi = g(-width), g(width)
        if g_lo < 0 < g_hi or g_lo == 0 or g_hi == 0:
            break
        width *= 2.0
        if width > max_bracket:
            raise BracketError(
                f"median not bracketed within +/-{max_bracket} for {q}: "
                f"centered cdf {g_lo!r} at low end, {g_hi!r} at high end"
            )
    return find_root(g, -width, width, x_tolerance=x_tolerance)


def default_band_rho_grid(n=49, lo=0.02, hi=0.98):
    """Symmetric grid of nonzero ``rho`` with ``|rho|`` spanning ``[lo, hi]``."""
    half = np.linspace(lo, hi, (n + 1) // 2)
    grid = np.concatenate([-half[::-1], half])
    if grid.size > n:
        # odd n: drop one copy of the innermost magnitude
        grid = np.delete(grid, (n + 1) // 2 - 1)
    return grid


def bias_band(lam, screened, rho_grid=None, estimator="iv"):
    """Range of ``|relative median bias|`` over a grid of ``rho``.

    Returns
    -------
    (lo, hi, failures) : float, float, list
        Failed points are listed as ``(rho, message)`` and skipped.
    """
    rho_grid = default_band_rho_grid() if rho_grid is None else np.asarray(rho_grid, dtype=float)
    cond = "screened" if screened else "unconditional"
    vals, failures = [], []
    for rho in rho_grid:
        try:
            q = BiasQuery(DesignPoint.from_lambda(lam, float(rho)), estimator, cond)
            vals.append(abs(median_bias_exact(q)))
        except (BracketError, IntegrationError, ParameterError) as exc:
            failures.append((float(rho), str(exc)))
    if not vals:
        return math.nan, math.nan, failures
    return min(vals), max(vals), failures


def bias_curve(ef_values, rho_grid=None, bands=True):
    """Median-bias bounds and rho-bands over a grid of ``E[F]``.

    Returns a list of dicts with keys ``ef, lambda, bound_uncond, bound_cond,
    cond_is_sup, band_uncond_min, band_uncond_max, band_cond_min,
    band_cond_max``. NaN marks points that failed.
    """
    rows = []
    for ef in ef_values:
        lam = math.sqrt(float(ef) - 1.0)
        row = {
            "ef": float(ef),
            "lambda": lam,
            "bound_uncond": float(iv_median_bias_bound(lam, False)),
            "bound_cond": float(iv_median_bias_bound(lam, True)),
            "cond_is_sup": int(bound_is_supremum(lam, True)),
        }
        if bands:
            u_lo, u_hi, _ = bias_band(lam, False, rho_grid)
            c_lo, c_hi, _ = bias_band(lam, True, rho_grid)
            row.update(
                band_uncond_min=u_lo, band_uncond_max=u_hi, band_cond_min=c_lo, band_cond_max=c_hi
            )
        rows.append(row)
    return rows
