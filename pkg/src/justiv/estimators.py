"""Point estimators and test statistics computed from a single reduced-form draw.

All functions operate elementwise when the draw holds numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .stats import mills_ratio

__all__ = [
    "DegenerateDrawError",
    "EstimatorOutput",
    "ar_t",
    "estimate_all",
    "iv_estimate",
    "iv_se",
    "shrinkage_weight",
    "unbiased_estimate",
    "wald_t",
    "wald_t_from_ar",
]


class DegenerateDrawError(ZeroDivisionError):
    """The IV estimator is undefined because the first-stage estimate is zero."""


@dataclass(frozen=True)
class EstimatorOutput:
    beta_iv: float
    se_iv: float
    beta_wols: float
    beta_u: float
    t1: float
    weight: float


def _check_first_stage(d):
    if np.any(np.asarray(d.pi_hat) == 0):
        raise DegenerateDrawError("pi_hat = 0: the IV estimate is undefined")


def iv_estimate(d):
    """Conventional just-identified IV estimate ``delta_hat / pi_hat``."""
    _check_first_stage(d)
    return d.delta_hat / d.pi_hat


def iv_se(d):
    """Conventional IV standard error given the known covariance matrix."""
    b = iv_estimate(d)
    radicand = d.sd_delta**2 - 2.0 * d.cov_rf * b + d.sd_pi**2 * b * b
    if np.any(np.asarray(radicand) < 0):
        # cannot happen for a positive-definite covariance
        raise ArithmeticError("negative IV variance")
    return np.sqrt(radicand / d.pi_hat**2)


def wald_t(d, beta0):
    """Wald t statistic ``(beta_iv - beta0) / se_iv``."""
    return (iv_estimate(d) - beta0) / iv_se(d)


def ar_t(d, beta0):
    """Anderson-Rubin t statistic for ``H0: beta = beta0``."""
    scale = np.sqrt(d.sd_delta**2 - 2.0 * d.cov_rf * beta0 + d.sd_pi**2 * beta0**2)
    return (d.delta_hat - d.pi_hat * beta0) / scale


def wald_t_from_ar(t_ar, t1, rho):
    """Wald t re-expressed through the AR statistic and the first-stage t.

    ``rho`` is the endogeneity evaluated at the hypothesized ``beta``.
    """
    r = t_ar / t1
    return np.sign(t1) * t_ar / np.sqrt(1.0 + r * r - 2.0 * rho * r)


def shrinkage_weight(t1):
    """Weight ``t1 * mu(t1)`` that the unbiased estimator puts on IV."""
    return t1 * mills_ratio(t1)


def unbiased_estimate(d):
    """Sign-restriction unbiased estimator of ``beta``.

    Computed as ``tau_hat * (delta_hat - beta_wols * pi_hat) + beta_wols`` with
    ``tau_hat = mu(t1) / sd_pi``. This stays finite at ``pi_hat = 0`` and avoids
    the cancellation in ``1 - t1 * mu(t1)`` for large ``t1``.
    """
    bw = d.beta_wols
    tau = mills_ratio(d.t1) / d.sd_pi
    return tau * (d.delta_hat - bw * d.pi_hat) + bw


def estimate_all(d):
    """Bundle every estimator for a scalar draw."""
    t1 = d.t1
    return EstimatorOutput(
        beta_iv=float(iv_estimate(d)),
        se_iv=float(iv_se(d)),
        beta_wols=float(d.beta_wols),
        beta_u=float(unbiased_estimate(d)),
        t1=float(t1),
        weight=float(shrinkage_weight(t1)),
    )
