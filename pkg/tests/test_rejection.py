import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from justiv.estimators import wald_t_from_ar
from justiv.model import DesignPoint, ParameterError, canonical_model
from justiv.oracle import SimulationPlan, mc_rejection_rate
from justiv.rejection import (
    RejectionQuery,
    conditional_rejection_prob,
    default_ef_grid,
    default_rho_grid,
    rejection_grid,
    rejection_rate,
    rejection_region_bounds,
    worst_case_rejection,
)
from justiv.stats import norm_cdf, norm_pdf

Z = 1.959963984540054


def rate(ef, rho, screen=-math.inf, alpha=0.05):
    return rejection_rate(RejectionQuery(DesignPoint(ef, rho), alpha, screen))


# --- region ----------------------------------------------------------------


def test_region_empty_when_first_stage_small():
    # t1^2 <= (1 - rho^2) z^2 leaves nothing to reject
    assert rejection_region_bounds(0.5, 0.3).kind == "empty"
    assert rejection_region_bounds(0.0, 0.9).kind == "empty"


def test_region_interval_and_complement():
    r = rejection_region_bounds(1.9, 0.9)
    assert r.kind == "interval"
    assert r.lower < r.upper
    r = rejection_region_bounds(3.0, 0.2)
    assert r.kind == "complement"


def test_region_uncorrelated_strong_case():
    # rho = 0: |t_W| = |t_AR| t1 / sqrt(t1^2 + t_AR^2) >= z  <=>  |t_AR| >= z t1 / sqrt(t1^2 - z^2)
    t1 = 4.0
    r = rejection_region_bounds(t1, 0.0)
    edge = Z * t1 / math.sqrt(t1 * t1 - Z * Z)
    assert r.kind == "complement"
    assert r.lower == pytest.approx(-edge, rel=1e-12)
    assert r.upper == pytest.approx(edge, rel=1e-12)


@pytest.mark.parametrize("t1,rho", [(1.9, 0.9), (-1.9, 0.9), (2.5, -0.6), (1.0, 0.95), (6.0, 0.3)])
def test_region_matches_grid_scan(t1, rho):
    x = np.linspace(-60, 60, 240001)
    direct = np.abs(wald_t_from_ar(x, t1, rho)) >= Z
    region = rejection_region_bounds(t1, rho).contains(x)
    # only grid points within a cell of an endpoint may disagree
    assert np.count_nonzero(direct != region) <= 2


def test_region_rejects_bad_rho():
    with pytest.raises(ParameterError):
        rejection_region_bounds(1.0, 1.0)


# --- conditional probability -------------------------------------------------


@pytest.mark.parametrize("t1,ef,rho", [(1.9, 4.0, 0.9), (3.0, 10.0, -0.5), (-2.2, 2.0, 0.7)])
def test_conditional_probability_against_integration(t1, ef, rho):
    d = DesignPoint(ef, rho)
    m, sd = rho * (t1 - d.lam), math.sqrt(1 - rho * rho)
    x = np.linspace(m - 12 * sd, m + 12 * sd, 400001)
    dens = norm_pdf((x - m) / sd) / sd
    hit = (np.abs(wald_t_from_ar(x, t1, rho)) >= Z).astype(float)
    expect = integrate.trapezoid(hit * dens, x)
    assert conditional_rejection_prob(t1, d) == pytest.approx(expect, abs=2e-6)


def test_conditional_probability_vectorized():
    d = DesignPoint(5.0, 0.4)
    t1 = np.array([-3.0, 0.0, 1.0, 2.5, 7.0])
    vec = conditional_rejection_prob(t1, d)
    assert vec.shape == t1.shape
    for t, v in zip(t1, vec):
        assert conditional_rejection_prob(t, d) == v
    assert vec[1] == 0.0


# --- rates -----------------------------------------------------------------


def test_rate_against_scipy_quad():
    d = DesignPoint(3.0, 0.8)
    f = lambda t: conditional_rejection_prob(t, d) * norm_pdf(t - d.lam)
    pts = [-Z, -Z * 0.6, 0.0, Z * 0.6, Z]
    expect = integrate.quad(f, -12, 14, points=pts, limit=400, epsabs=1e-13)[0]
    assert rate(3.0, 0.8) == pytest.approx(expect, abs=1e-9)


def test_rate_in_unit_interval_and_level_at_zero_rho_strong():
    for ef in (1.0, 5.0, 1e3):
        for rho in (-0.99, 0.0, 0.7):
            assert 0.0 <= rate(ef, rho) <= 1.0


def test_strong_instrument_limit():
    for rho in (-0.9, 0.0, 0.5, 0.9):
        assert rate(1e4, rho) == pytest.approx(0.05, abs=0.003)


def test_uncorrelated_test_underrejects():
    # with rho = 0 the Wald test is conservative at every strength
    for ef in (1.0, 2.0, 5.0, 20.0):
        assert rate(ef, 0.0) < 0.05


@settings(max_examples=25, deadline=None)
@given(st.floats(1.0, 200.0), st.floats(0.0, 0.99))
def test_rho_symmetry(ef, rho):
    assert abs(rate(ef, rho) - rate(ef, -rho)) <= 1e-10
    assert abs(rate(ef, rho, 0.0) - rate(ef, -rho, 0.0)) <= 1e-10


def test_screened_close_to_unconditional_when_strong():
    for rho in (0.2, 0.9):
        assert rate(50.0, rho, 0.0) == pytest.approx(rate(50.0, rho), abs=1e-9)


@pytest.mark.parametrize("ef,rho,screen", [(2.0, 0.9, -math.inf), (4.0, 0.5, 0.0), (1.0, -0.95, 0.0)])
def test_rate_against_monte_carlo(ef, rho, screen):
    plan = SimulationPlan(
        canonical_model(DesignPoint(ef, rho)), 400_000, seed=7, screen="none" if screen < 0 else "positive"
    )
    mc = mc_rejection_rate(plan)
    assert abs(mc.value - rate(ef, rho, screen)) <= 3.5 * mc.se


def test_worst_case_matches_dense_scan():
    rho = 0.8
    best, ef_at = worst_case_rejection(rho, ef_max=100.0)
    scan = max(rate(ef, rho) for ef in np.geomspace(1, 100, 300))
    assert best >= scan - 1e-7
    assert best == pytest.approx(rate(ef_at, rho), abs=1e-12)


def test_default_grids():
    efs = default_ef_grid()
    rhos = default_rho_grid()
    assert efs.size == 20 and efs[0] == 1.0 and efs[-1] == pytest.approx(1e4)
    assert rhos.size == 41 and rhos[0] == -0.999 and rhos[20] == 0.0


def test_rejection_grid_rows_and_failures():
    g = rejection_grid([4.0, 1.0], [0.5, -0.5, 0.0])
    rows = list(g.rows())
    assert [r[:2] for r in rows[:3]] == [(1.0, -0.5), (1.0, 0.0), (1.0, 0.5)]
    assert not g.failures
    assert rows[0][2] == pytest.approx(rate(1.0, -0.5), abs=0)
