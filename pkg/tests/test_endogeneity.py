import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from justiv.endogeneity import (
    CalibrationError,
    StudySummary,
    calibrate,
    estimate_rho,
    read_studies,
    recover_cov_rf,
    rho_bound_measurement_error,
    rho_bound_over_beta_range,
    rho_ovb_approx,
    rho_ovb_exact,
    rho_r2_decomposition,
)
from justiv.estimators import iv_estimate, iv_se
from justiv.model import ModelParams, ParameterError, ReducedFormDraw, design_from_model


def summary_from_model(m, **extra):
    # reported numbers at the mean draw: delta_hat = pi beta, pi_hat = pi
    d = ReducedFormDraw(m.pi * m.beta, m.pi, m.sd_delta, m.sd_pi, m.cov_rf)
    return StudySummary(
        beta_iv=float(iv_estimate(d)), se_iv=float(iv_se(d)), pi_hat=m.pi, sd_pi=m.sd_pi,
        sd_delta=m.sd_delta, **extra,
    )


# --- fixtures quoted in the literature ---------------------------------------


def test_ovb_product_fixture():
    # sd ratio 0.022 times an OLS-minus-IV gap of 3.42
    assert rho_ovb_approx(0.022, 1.0, 3.42, 0.0) == pytest.approx(0.075, abs=1e-3)
    assert rho_ovb_approx(0.022, 1.0, 3.42, 0.0) == pytest.approx(0.07524, rel=1e-12)


def test_beta_range_fixtures():
    assert rho_bound_over_beta_range(5.2, 0.08, 0.0, 0.16) == pytest.approx(0.41, abs=0.02)
    # 0.57 - 0.18 in binary floating point is 0.38999999999999996
    assert rho_bound_over_beta_range(1.0, -0.18, -0.57, 0.0) == pytest.approx(0.39, abs=1e-15)
    assert rho_bound_over_beta_range(3.0, 0.5, 0.5, 0.5) == 0.0


def test_measurement_error_fixtures():
    assert rho_bound_measurement_error(0.65, 0.4) == pytest.approx(0.7638, abs=1e-3)
    assert rho_bound_measurement_error(0.65, 0.4) == pytest.approx(math.sqrt(0.35 / 0.6), rel=1e-15)
    assert rho_bound_measurement_error(0.8, 0.0) == pytest.approx(math.sqrt(0.2))
    assert rho_bound_measurement_error(1.0, 0.7) == 0.0
    with pytest.raises(ParameterError):
        rho_bound_measurement_error(0.5, 1.0)
    with pytest.raises(ParameterError):
        rho_bound_measurement_error(0.0, 0.2)


def test_decomposition_identity():
    ols, causal = rho_r2_decomposition(0.022, 1.0, 3.5, 0.08)
    assert ols - causal == pytest.approx(rho_ovb_approx(0.022, 1.0, 3.5, 0.08), rel=1e-14)
    assert rho_r2_decomposition(2.0, 1.0, 0.3, 0.0)[1] == 0.0
    assert rho_ovb_approx(1.3, 2.0, 0.4, 0.4) == 0.0


def test_ovb_validation():
    with pytest.raises(ParameterError):
        rho_ovb_approx(1.0, 0.0, 1.0, 0.0)
    with pytest.raises(ParameterError):
        rho_bound_over_beta_range(1.0, 0.0, 1.0, 0.0)


# --- homoskedastic structural model ------------------------------------------


@pytest.mark.parametrize("pi,sd_v,sd_eps,corr,beta", [(0.5, 1.0, 2.0, 0.3, 1.0), (0.05, 2.0, 1.0, -0.6, 0.0)])
def test_ovb_forms_in_structural_model(pi, sd_v, sd_eps, corr, beta):
    # D = pi Z + v, Y = beta D + eps with Var(Z) = 1
    cov_ev = corr * sd_v * sd_eps
    var_d = pi * pi + sd_v * sd_v
    beta_ols = beta + cov_ev / var_d
    r2p = pi * pi / var_d
    assert rho_ovb_approx(sd_v, sd_eps, beta_ols, beta, r2p) == pytest.approx(corr, rel=1e-12)
    # beta_wols is the OLS estimand with the instrument's contribution removed
    beta_wols = beta + cov_ev / sd_v**2
    assert rho_ovb_exact(sd_v, sd_eps, beta_wols, beta) == pytest.approx(corr, rel=1e-12)


def test_data_sd_form_converges_as_first_stage_fades():
    corr, sd_v, sd_eps = 0.4, 1.0, 1.0
    gaps = []
    for pi in (0.3, 0.1, 0.03, 0.01):
        var_d = pi * pi + sd_v**2
        beta_ols = corr * sd_v * sd_eps / var_d
        gaps.append(abs(rho_ovb_approx(math.sqrt(var_d), sd_eps, beta_ols, 0.0) - corr))
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-4


# --- plug-in estimate --------------------------------------------------------


def test_estimate_rho_trivial_case():
    s = StudySummary(beta_iv=1.0, se_iv=math.sqrt(2), pi_hat=1.0, sd_pi=1.0, sd_delta=1.0)
    assert recover_cov_rf(s) == pytest.approx(0.0, abs=1e-15)
    assert estimate_rho(s) == pytest.approx(-1 / math.sqrt(2), rel=1e-14)


@settings(max_examples=200)
@given(
    st.one_of(st.floats(-3, -0.05), st.floats(0.05, 3)),
    st.floats(0.1, 10),
    st.floats(0.2, 5),
    st.floats(0.2, 5),
    st.floats(-0.95, 0.95),
)
def test_forward_inverse(beta, pi, sd_d, sd_p, corr):
    # the covariance is recovered by dividing by 2 beta_iv, so beta_iv near 0
    # is ill-conditioned and excluded
    m = ModelParams(beta, pi, sd_d, sd_p, corr * sd_d * sd_p)
    if abs(design_from_model(m).rho) > 0.999:
        return
    s = summary_from_model(m)
    assert abs(estimate_rho(s) - design_from_model(m).rho) <= 1e-10


def test_rho_unchanged_by_instrument_sign():
    m = ModelParams(0.7, 1.5, 1.0, 0.8, 0.3)
    s = summary_from_model(m)
    flipped = StudySummary(s.beta_iv, s.se_iv, -s.pi_hat, s.sd_pi, s.sd_delta)
    assert estimate_rho(flipped) == pytest.approx(estimate_rho(s), rel=1e-14)


def test_estimate_rho_errors_and_clamp():
    with pytest.raises(CalibrationError):
        estimate_rho(StudySummary(0.0, 1.0, 1.0, 1.0, 1.0))
    with pytest.raises(CalibrationError):
        estimate_rho(StudySummary(1.0, 1.0, 0.0, 1.0, 1.0))
    # here rho_hat = -se / 2, so an s.e. a little above 2 pushes it past -1
    with pytest.warns(RuntimeWarning):
        assert estimate_rho(StudySummary(1.0, 2.04, 1.0, 1.0, 1.0)) == -1.0
    assert estimate_rho(StudySummary(1.0, 2.04, 1.0, 1.0, 1.0), clamp=False) == pytest.approx(-1.02)
    with pytest.raises(CalibrationError):
        estimate_rho(StudySummary(1.0, 2.5, 1.0, 1.0, 1.0))


def test_study_summary_validation():
    with pytest.raises(CalibrationError):
        StudySummary(1.0, -1.0, 1.0, 1.0, 1.0)
    with pytest.raises(CalibrationError):
        StudySummary(1.0, 1.0, 1.0, 1.0, 1.0, reliability=1.5)


def test_monte_carlo_roundtrip_strong_design():
    # summaries at simulated draws estimate rho with sampling noise only
    rng = np.random.default_rng(5)
    rho, lam = 0.3, math.sqrt(99)
    est = []
    for _ in range(400):
        e = rng.standard_normal(2)
        delta = e[0]
        pi = lam + rho * e[0] + math.sqrt(1 - rho * rho) * e[1]
        d = ReducedFormDraw(delta, pi, 1.0, 1.0, rho)
        s = StudySummary(float(iv_estimate(d)), float(iv_se(d)), pi, 1.0, 1.0)
        est.append(estimate_rho(s, clamp=False))
    assert np.mean(est) == pytest.approx(rho, abs=0.02)


# --- calibration report and input files --------------------------------------


def test_calibrate_full_row():
    s = StudySummary(
        beta_iv=0.08, se_iv=0.02, pi_hat=0.1, sd_pi=0.02, sd_delta=0.002,
        beta_ols=0.075, sd_d=0.5, sd_y=0.7, n=1000, r2p=0.4, reliability=0.65, name="x",
    )
    row = calibrate(s)
    assert row["name"] == "x"
    assert row["ef_hat"] == pytest.approx(26.0)
    assert row["rho_hat"] == pytest.approx(estimate_rho(s))
    assert row["rho_ovb"] == pytest.approx(0.5 / 0.7 * (0.075 - 0.08))
    assert row["rho_bound_me"] == pytest.approx(0.7638, abs=1e-3)
    assert row["ef_from_r2p"] == pytest.approx(1000 * 0.4 / 0.6 + 1)
    assert row["notes"] == ""


def test_calibrate_partial_row_notes():
    row = calibrate(StudySummary(1.0, math.sqrt(2), 1.0, 1.0, 1.0))
    assert math.isnan(row["rho_ovb"]) and math.isnan(row["rho_bound_me"])
    assert "rho_ovb needs" in row["notes"]
    assert "measurement-error bound needs" in row["notes"]


def test_read_studies_csv_and_json(tmp_path):
    csv_path = tmp_path / "studies.csv"
    csv_path.write_text(
        "name,beta_iv,se_iv,pi_hat,sd_pi,sd_delta,reliability,r2p\n"
        "good,1,1.4142135623730951,1,1,1,0.65,0.4\n"
        "missing,1,,1,1,1,,\n"
        "bad,1,abc,1,1,1,,\n"
    )
    out = read_studies(csv_path)
    assert isinstance(out[0], StudySummary) and out[0].name == "good"
    assert out[0].reliability == 0.65
    assert isinstance(out[1], CalibrationError) and "se_iv" in str(out[1])
    assert isinstance(out[2], ValueError)

    json_path = tmp_path / "studies.json"
    json_path.write_text(json.dumps({"beta_iv": 1, "se_iv": 2, "pi_hat": 1, "sd_pi": 1, "sd_delta": 1}))
    (one,) = read_studies(json_path)
    assert one.se_iv == 2.0 and one.name == ""
