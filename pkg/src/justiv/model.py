"""Parameterizations of the normal just-identified IV model.

The reduced-form and first-stage estimates ``(delta_hat, pi_hat)`` are jointly
normal with mean ``(pi * beta, pi)`` and a known covariance matrix. Everything
the library computes depends on the model only through two numbers: the
population first-stage F, ``E[F] = pi^2 / sd_pi^2 + 1``, and the endogeneity
``rho = corr(delta_hat - pi_hat * beta, pi_hat)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DesignPoint",
    "ModelParams",
    "ParameterError",
    "ReducedFormDraw",
    "canonical_model",
    "design_from_model",
    "ef_from_first_stage_fit",
]


class ParameterError(ValueError):
    """Invalid or degenerate model parameters."""


@dataclass(frozen=True)
class ModelParams:
    """Full parameterization of the normal reduced-form model.

    Attributes
    ----------
    beta : float
        Structural coefficient.
    pi : float
        First-stage coefficient.
    sd_delta, sd_pi : float
        Standard deviations of the reduced-form and first-stage estimates.
    cov_rf : float
        Covariance between the two estimates.
    """

    beta: float
    pi: float
    sd_delta: float
    sd_pi: float
    cov_rf: float

    def __post_init__(self):
        if not (self.sd_delta > 0 and self.sd_pi > 0):
            raise ParameterError("sd_delta and sd_pi must be positive")
        if not abs(self.cov_rf) < self.sd_delta * self.sd_pi:
            raise ParameterError("covariance matrix is not positive definite")

    @property
    def beta_wols(self):
        """Weak-instrument limit of the OLS estimand, ``cov_rf / sd_pi^2``."""
        return self.cov_rf / self.sd_pi**2

    @property
    def mean(self):
        return np.array([self.pi * self.beta, self.pi])

    @property
    def cov(self):
        return np.array(
            [[self.sd_delta**2, self.cov_rf], [self.cov_rf, self.sd_pi**2]]
        )


@dataclass(frozen=True)
class DesignPoint:
    """Instrument strength and endogeneity, the two free parameters.

    Attributes
    ----------
    ef : float
        Population first-stage F statistic, at least 1.
    rho : float
        Endogeneity, strictly inside (-1, 1).
    """

    ef: float
    rho: float

    def __post_init__(self):
        if not self.ef >= 1:
            raise ParameterError(f"E[F] must be >= 1, got {self.ef}")
        if not abs(self.rho) < 1:
            raise ParameterError(f"|rho| must be < 1, got {self.rho}")

    @classmethod
    def from_lambda(cls, lam, rho):
        """Build a design point from the mean first-stage t-ratio."""
        if lam < 0:
            raise ParameterError(f"lambda must be non-negative, got {lam}")
        return cls(lam * lam + 1.0, rho)

    @property
    def lam(self):
        """Mean of the first-stage t statistic, ``sqrt(E[F] - 1)``."""
        return math.sqrt(self.ef - 1.0)

    @property
    def s(self):
        """Transformed endogeneity ``rho / sqrt(1 - rho^2)``."""
        return self.rho / math.sqrt(1.0 - self.rho**2)


@dataclass(frozen=True)
class ReducedFormDraw:
    """A realization of ``(delta_hat, pi_hat)`` with its known covariance.

    ``delta_hat`` and ``pi_hat`` may be numpy arrays of equal shape, in which
    case every estimator in :mod:`justiv.estimators` works elementwise.
    """

    delta_hat: float
    pi_hat: float
    sd_delta: float
    sd_pi: float
    cov_rf: float

    def __post_init__(self):
        if not (self.sd_delta > 0 and self.sd_pi > 0):
            raise ParameterError("sd_delta and sd_pi must be positive")
        if not abs(self.cov_rf) < self.sd_delta * self.sd_pi:
            raise ParameterError("covariance matrix is not positive definite")

    @classmethod
    def from_model(cls, model, delta_hat, pi_hat):
        return cls(delta_hat, pi_hat, model.sd_delta, model.sd_pi, model.cov_rf)

    @property
    def t1(self):
        """First-stage t statistic ``pi_hat / sd_pi``."""
        return self.pi_hat / self.sd_pi

    @property
    def beta_wols(self):
        return self.cov_rf / self.sd_pi**2


def design_from_model(m):
    """Map full model parameters to ``(E[F], rho)``."""
    radicand = m.sd_delta**2 - 2.0 * m.beta * m.cov_rf + m.sd_pi**2 * m.beta**2
    if not radicand > 0:
        raise ParameterError("degenerate structural variance; covariance not positive definite")
    ef = m.pi**2 / m.sd_pi**2 + 1.0
    rho = m.sd_pi / math.sqrt(radicand) * (m.cov_rf / m.sd_pi**2 - m.beta)
    return DesignPoint(ef, rho)


def canonical_model(d):
    """Representative model with ``beta = 0`` and unit standard deviations.

    With this choice ``pi = lambda`` and ``cov_rf = rho``.
    """
    return ModelParams(beta=0.0, pi=d.lam, sd_delta=1.0, sd_pi=1.0, cov_rf=d.rho)


def ef_from_first_stage_fit(n, r2p):
    """Population first-stage F implied by sample size and partial R^2."""
    if n < 1:
        raise ParameterError(f"sample size must be >= 1, got {n}")
    if not 0 <= r2p < 1:
        raise ParameterError(f"partial R^2 must lie in [0, 1), got {r2p}")
    return n * r2p / (1.0 - r2p) + 1.0
