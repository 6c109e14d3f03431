"""Endogeneity calibration from published regression output, and bounds on it.

The plug-in estimate recovers the reduced-form/first-stage covariance from the
reported IV standard error and then evaluates the endogeneity formula at
``beta = beta_iv``. The bounds express endogeneity through the OLS
omitted-variables bias or through the reliability of a mismeasured regressor.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, fields
from pathlib import Path

from .model import ParameterError, ef_from_first_stage_fit

__all__ = [
    "CalibrationError",
    "STUDY_FIELDS",
    "StudySummary",
    "calibrate",
    "estimate_rho",
    "read_studies",
    "recover_cov_rf",
    "rho_bound_measurement_error",
    "rho_bound_over_beta_range",
    "rho_ovb_approx",
    "rho_ovb_exact",
    "rho_r2_decomposition",
]

RHO_SLACK = 0.05


class CalibrationError(ValueError):
    """Study inputs that cannot support the requested calculation."""


@dataclass(frozen=True)
class StudySummary:
    """Published outputs of one just-identified IV study.

    ``sd_d`` and ``sd_y`` are standard deviations of the treatment and outcome
    in the data. Optional fields left as ``None`` disable the calculations
    that need them.
    """

    beta_iv: float
    se_iv: float
    pi_hat: float
    sd_pi: float
    sd_delta: float
    beta_ols: float | None = None
    sd_d: float | None = None
    sd_y: float | None = None
    n: float | None = None
    r2p: float | None = None
    reliability: float | None = None
    name: str = ""

    def __post_init__(self):
        for attr in ("se_iv", "sd_pi", "sd_delta", "sd_d", "sd_y"):
            v = getattr(self, attr)
            if v is not None and not v > 0:
                raise CalibrationError(f"{attr} must be positive, got {v}")
        if self.reliability is not None and not 0 < self.reliability <= 1:
            raise CalibrationError(f"reliability must lie in (0, 1], got {self.reliability}")


STUDY_FIELDS = tuple(f.name for f in fields(StudySummary) if f.name != "name")


def recover_cov_rf(s):
    """Reduced-form/first-stage covariance implied by the reported IV s.e."""
    if s.beta_iv == 0:
        raise CalibrationError(
            "beta_iv = 0: the covariance is not identified from the IV standard error; "
            "use rho_ovb_approx instead"
        )
    return (s.sd_pi**2 * s.beta_iv**2 - s.pi_hat**2 * s.se_iv**2 + s.sd_delta**2) / (2.0 * s.beta_iv)


def estimate_rho(s, clamp=True):
    """Plug-in endogeneity estimate.

    Sampling noise can push the estimate slightly outside ``[-1, 1]``. Values
    within 0.05 of the range are clamped with a warning; anything further
    out raises :class:`CalibrationError`. Pass ``clamp=False`` to get the raw
    value.
    """
    if s.pi_hat == 0:
        raise CalibrationError("pi_hat = 0: endogeneity estimate undefined")
    cov = recover_cov_rf(s)
    rho = s.sd_pi / (abs(s.pi_hat) * s.se_iv) * (cov / s.sd_pi**2 - s.beta_iv)
    if not clamp:
        return rho
    if abs(rho) > 1.0 + RHO_SLACK:
        raise CalibrationError(f"estimated rho = {rho:.4f} is outside [-1, 1]; inputs inconsistent")
    if abs(rho) > 1.0:
        warnings.warn(f"estimated rho = {rho:.4f} clamped to [-1, 1]", RuntimeWarning, stacklevel=2)
        rho = math.copysign(1.0, rho)
    return rho


def rho_ovb_approx(sd_d, sd_y, beta_ols, beta, r2p=0.0):
    """Endogeneity from the OLS omitted-variables bias.

    With data standard deviations and ``r2p = 0`` this is the usual
    approximation ``(sd_d / sd_y) * (beta_ols - beta)``. Supplying residual
    standard deviations and the first-stage partial R^2 gives the exact
    homoskedastic expression ``(sd_v / sd_eps) * (beta_ols - beta) / (1 - r2p)``.
    """
    if not sd_y > 0:
        raise ParameterError("sd_y must be positive")
    if not 0 <= r2p < 1:
        raise ParameterError("partial R^2 must lie in [0, 1)")
    return sd_d / sd_y * (beta_ols - beta) / (1.0 - r2p)


def rho_ovb_exact(sd_v, sd_eps, beta_wols, beta):
    """Homoskedastic endogeneity ``(sd_v / sd_eps) * (beta_wols - beta)``."""
    return sd_v / sd_eps * (beta_wols - beta)


def rho_bound_over_beta_range(sd_ratio, beta_ols, beta_low, beta_high):
    """Largest ``|rho|`` when the causal effect is only known to lie in a range."""
    if beta_low > beta_high:
        raise ParameterError("beta_low must not exceed beta_high")
    if not sd_ratio > 0:
        raise ParameterError("sd_ratio must be positive")
    return sd_ratio * max(abs(beta_ols - beta_low), abs(beta_ols - beta_high))


def rho_bound_measurement_error(reliability, r2p):
    """Bound on ``|rho|`` when IV corrects classical measurement error."""
    if not 0 < reliability <= 1:
        raise ParameterError("reliability must lie in (0, 1]")
    if not 0 <= r2p < 1:
        raise ParameterError("partial R^2 must lie in [0, 1)")
    return math.sqrt((1.0 - reliability) / (1.0 - r2p))


def rho_r2_decomposition(sd_d, sd_y, beta_ols, beta):
    """Split the OVB approximation into an OLS term and a causal term."""
    if not sd_y > 0:
        raise ParameterError("sd_y must be positive")
    ratio = sd_d / sd_y
    return ratio * beta_ols, ratio * beta


def calibrate(s):
    """Calibration report for one study.

    Quantities whose inputs are missing are reported as NaN with the reason
    listed under ``notes``.
    """
    nan = math.nan
    out = {
        "name": s.name,
        "ef_hat": s.pi_hat**2 / s.sd_pi**2 + 1.0,
        "cov_rf": nan,
        "rho_hat": nan,
        "rho_ovb": nan,
        "term_ols": nan,
        "term_causal": nan,
        "rho_bound_me": nan,
        "ef_from_r2p": nan,
    }
    notes = []
    try:
        out["cov_rf"] = recover_cov_rf(s)
        out["rho_hat"] = estimate_rho(s)
    except CalibrationError as exc:
        notes.append(str(exc))
    if None in (s.sd_d, s.sd_y, s.beta_ols):
        notes.append("rho_ovb needs beta_ols, sd_d and sd_y")
    else:
        out["rho_ovb"] = rho_ovb_approx(s.sd_d, s.sd_y, s.beta_ols, s.beta_iv)
        out["term_ols"], out["term_causal"] = rho_r2_decomposition(
            s.sd_d, s.sd_y, s.beta_ols, s.beta_iv
        )
    if s.reliability is None or s.r2p is None:
        notes.append("measurement-error bound needs reliability and r2p")
    else:
        out["rho_bound_me"] = rho_bound_measurement_error(s.reliability, s.r2p)
    if s.n is None or s.r2p is None:
        notes.append("E[F] from fit needs n and r2p")
    else:
        out["ef_from_r2p"] = ef_from_first_stage_fit(s.n, s.r2p)
    out["notes"] = "; ".join(notes)
    return out


def _parse_record(rec):
    kwargs = {}
    for key in STUDY_FIELDS:
        raw = rec.get(key)
        if raw is None or (isinstance(raw, str) and raw.strip() == ""):
            continue
        kwargs[key] = float(raw)
    missing = [k for k in ("beta_iv", "se_iv", "pi_hat", "sd_pi", "sd_delta") if k not in kwargs]
    if missing:
        raise CalibrationError(f"missing required fields: {', '.join(missing)}")
    return StudySummary(name=str(rec.get("name", "") or ""), **kwargs)


def read_studies(path):
    """Read study records from a CSV or JSON file.

    Returns a list with one entry per record: a :class:`StudySummary`, or the
    exception that prevented parsing it.
    """
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        records = json.loads(text)
        if isinstance(records, dict):
            records = [records]
    else:
        records = list(csv.DictReader(text.splitlines()))
    out = []
    for rec in records:
        try:
            out.append(_parse_record(rec))
        except (CalibrationError, ValueError, TypeError) as exc:
            out.append(exc)
    return out
