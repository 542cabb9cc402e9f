"""Tests des primitives de probabilité : GEV, Pareto-Poisson et loi normale standard."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from mevforge.core.distributions import (
    GevParams,
    NormalCond,
    ParetoPoissonParams,
    gev_cdf,
    gev_loglik,
    gev_mean,
    gev_pdf,
    gev_quantile,
    gev_quantile_gradient,
    gpd_loglik,
    pp_cdf,
    pp_loglik,
    pp_pdf,
    pp_quantile,
    pp_quantile_gradient,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
)
from mevforge.core.exceptions import DomainError

from .conftest import CASE1_GEV, CASE2_PP

gev_params = st.builds(
    GevParams,
    mu=st.floats(-10.0, 10.0),
    logpsi=st.floats(-2.0, 2.0),
    xi=st.floats(-0.5, 0.5),
)


# ---- GEV ----

def test_gumbel_cdf_at_location():
    """F(μ) = exp(-1) pour ξ = 0"""
    assert gev_cdf(5.0, GevParams(5.0, 0.3, 0.0)) == pytest.approx(np.exp(-1.0), rel=1e-15)


def test_gumbel_quantile_closed_form():
    """μ=5.1046, log ψ=-0.5173, q=0.98 → μ - ψ log(-log q) ≈ 7.4307"""
    p = GevParams(5.1046, -0.5173, 0.0)
    expected = 5.1046 - np.exp(-0.5173) * np.log(-np.log(0.98))
    assert gev_quantile(0.98, p) == pytest.approx(expected, rel=1e-14)
    assert gev_quantile(0.98, p) == pytest.approx(7.4307, abs=1e-3)


def test_gumbel_density_at_mode():
    p = GevParams(2.0, 0.4, 0.0)
    assert gev_pdf(2.0, p) == pytest.approx(np.exp(-1.0) / np.exp(0.4), rel=1e-14)


def test_gev_cdf_limits():
    assert gev_cdf(np.inf, CASE1_GEV) == 1.0
    assert gev_cdf(-np.inf, GevParams(0.0, 0.0, 0.0)) == 0.0


def test_gev_outside_support():
    """ξ < 0 : borne supérieure μ - ψ/ξ, densité nulle et F = 1 au-delà"""
    upper = CASE1_GEV.support()[1]
    assert upper == pytest.approx(10.0 + np.exp(0.5) / 0.15)
    assert gev_pdf(upper + 1.0, CASE1_GEV) == 0.0
    assert gev_cdf(upper + 1.0, CASE1_GEV) == 1.0
    frechet = GevParams(0.0, 0.0, 0.3)
    lower = frechet.support()[0]
    assert gev_pdf(lower - 0.5, frechet) == 0.0
    assert gev_cdf(lower - 0.5, frechet) == 0.0


def test_gev_quantile_round_trip_case1():
    x = gev_quantile(0.99, CASE1_GEV)
    assert gev_cdf(x, CASE1_GEV) == pytest.approx(0.99, abs=1e-12)


@pytest.mark.parametrize("q", [0.0, 1.0, 1.5, -0.1])
def test_gev_quantile_rejects_invalid_probability(q):
    with pytest.raises(DomainError):
        gev_quantile(q, CASE1_GEV)


def test_domain_error_is_value_error():
    with pytest.raises(ValueError):
        gev_quantile(1.0, CASE1_GEV)


def test_gev_density_integrates_to_one():
    lower = gev_quantile(1e-14, CASE1_GEV)
    upper = CASE1_GEV.support()[1]
    total, _ = integrate.quad(lambda x: gev_pdf(x, CASE1_GEV), lower, upper,
                              epsabs=1e-12, epsrel=1e-12, limit=200)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_gev_pdf_matches_cdf_derivative():
    """Différence centrée de F contre f sur les quantiles intérieurs"""
    x = np.atleast_1d(gev_quantile(np.linspace(0.05, 0.95, 10), CASE1_GEV))
    h = 1e-6 * CASE1_GEV.psi
    numeric = (gev_cdf(x + h, CASE1_GEV) - gev_cdf(x - h, CASE1_GEV)) / (2 * h)
    np.testing.assert_allclose(gev_pdf(x, CASE1_GEV), numeric, rtol=1e-5)


def test_gev_vectorized_shapes():
    x = np.linspace(5.0, 15.0, 7)
    assert gev_cdf(x, CASE1_GEV).shape == (7,)
    assert isinstance(gev_cdf(5.0, CASE1_GEV), float)


def test_gev_quantile_gradient_matches_finite_differences():
    q = 0.98
    analytic = gev_quantile_gradient(q, CASE1_GEV)
    theta = CASE1_GEV.to_array()
    numeric = np.empty(3)
    for j in range(3):
        h = 1e-6
        up, down = theta.copy(), theta.copy()
        up[j] += h
        down[j] -= h
        numeric[j] = (gev_quantile(q, CASE1_GEV.with_array(up)) - gev_quantile(q, CASE1_GEV.with_array(down))) / (2 * h)
    np.testing.assert_allclose(analytic, numeric, rtol=1e-6)


def test_gev_loglik_single_point():
    p = GevParams(1.0, 0.2, 0.0)
    assert gev_loglik([1.0], p) == pytest.approx(-1.0 - 0.2, rel=1e-14)


def test_gev_loglik_outside_support_and_empty():
    assert gev_loglik([CASE1_GEV.support()[1] + 1.0], CASE1_GEV) == -np.inf
    with pytest.raises(DomainError):
        gev_loglik([], CASE1_GEV)


def test_gev_mean_gumbel():
    assert gev_mean(GevParams(0.0, 0.0, 0.0)) == pytest.approx(np.euler_gamma)
    assert gev_mean(GevParams(0.0, 0.0, 1.2)) == np.inf


@settings(max_examples=60, deadline=None)
@given(p=gev_params)
def test_gev_cdf_nondecreasing(p):
    x = np.sort(np.atleast_1d(gev_quantile(np.linspace(0.001, 0.999, 40), p)))
    grid = np.linspace(x[0] - 1.0, x[-1] + 1.0, 200)
    assert np.all(np.diff(gev_cdf(grid, p)) >= 0.0)


@settings(max_examples=60, deadline=None)
@given(p=gev_params, q=st.floats(1e-6, 1.0 - 1e-6))
def test_gev_quantile_round_trip(p, q):
    assert abs(gev_cdf(gev_quantile(q, p), p) - q) <= 1e-10


@pytest.mark.parametrize("xi", [1.01e-8, -1.01e-8])
def test_gumbel_branch_is_continuous(xi):
    """F en ξ = ±1.01e-8 (branche générale) proche de la branche Gumbel"""
    t = np.linspace(-2.0, 8.0, 101)
    gumbel = GevParams(3.0, 0.0, 0.0)
    near = GevParams(3.0, 0.0, xi)
    np.testing.assert_allclose(gev_cdf(3.0 + t, near), gev_cdf(3.0 + t, gumbel), atol=1e-8)


# ---- Pareto-Poisson ----

def test_pp_cdf_atom_at_threshold():
    """F(u) = exp(-λ), F = 0 sous le seuil"""
    p = ParetoPoissonParams(lam=2.0, logpsi=0.0, xi=0.0, u=1.0)
    assert pp_cdf(1.0, p) == pytest.approx(np.exp(-2.0), rel=1e-14)
    assert pp_cdf(0.999, p) == 0.0
    assert p.no_exceedance_probability == pytest.approx(np.exp(-2.0))


def test_pp_cdf_upper_limits():
    assert pp_cdf(1e6, CASE2_PP) == 1.0
    assert pp_cdf(np.inf, ParetoPoissonParams(lam=3.0, logpsi=0.0, xi=0.2, u=0.0)) == 1.0


def test_pp_quantile_round_trip_case2():
    x = pp_quantile(0.99, CASE2_PP)
    assert pp_cdf(x, CASE2_PP) == pytest.approx(0.99, abs=1e-12)


def test_pp_quantile_censored_below_atom():
    p = ParetoPoissonParams(lam=0.5, logpsi=0.0, xi=0.1, u=2.0)
    value, censored = pp_quantile(0.5 * np.exp(-0.5), p, return_flag=True)
    assert value == 2.0
    assert censored is True
    value, censored = pp_quantile(0.9, p, return_flag=True)
    assert value > 2.0 and censored is False
    assert np.all(pp_quantile_gradient(0.1, p) == 0.0)


def test_pp_pdf_matches_cdf_derivative():
    x = np.linspace(3.0, 8.0, 9)
    h = 1e-6
    numeric = (pp_cdf(x + h, CASE2_PP) - pp_cdf(x - h, CASE2_PP)) / (2 * h)
    np.testing.assert_allclose(pp_pdf(x, CASE2_PP), numeric, rtol=1e-5)


def test_pp_support_bounded_for_negative_shape():
    lo, hi = CASE2_PP.support()
    assert lo == 2.5
    assert hi == pytest.approx(2.5 + np.exp(-0.13) / 0.05)


def test_pp_quantile_gradient_matches_finite_differences():
    q = 0.99
    analytic = pp_quantile_gradient(q, CASE2_PP)
    theta = CASE2_PP.to_array()
    numeric = np.empty(3)
    for j in range(3):
        h = 1e-6 * max(abs(theta[j]), 1.0)
        up, down = theta.copy(), theta.copy()
        up[j] += h
        down[j] -= h
        numeric[j] = (pp_quantile(q, CASE2_PP.with_array(up)) - pp_quantile(q, CASE2_PP.with_array(down))) / (2 * h)
    np.testing.assert_allclose(analytic, numeric, rtol=1e-5)


def test_pp_loglik_requires_consistent_counts():
    with pytest.raises(DomainError):
        pp_loglik([3.0, 4.0], [1, 0, 0], CASE2_PP)
    assert pp_loglik([3.0, 2.0], [1, 1], CASE2_PP) == -np.inf


def test_pp_rejects_nonpositive_rate():
    with pytest.raises(DomainError):
        ParetoPoissonParams(lam=0.0, logpsi=0.0, xi=0.0, u=0.0)


def test_gpd_loglik_exponential():
    """ξ = 0 : -n log ψ - Σe/ψ"""
    e = np.array([0.5, 1.0, 2.0])
    assert gpd_loglik(e, np.log(2.0), 0.0) == pytest.approx(-3 * np.log(2.0) - 3.5 / 2.0)
    assert gpd_loglik(e, 0.0, -1.0) == -np.inf


# ---- Loi normale ----

def test_std_normal_values():
    assert std_normal_cdf(0.0) == 0.5
    assert std_normal_cdf(1.959964) == pytest.approx(0.975, abs=1e-6)
    assert std_normal_quantile(0.5) == 0.0
    assert std_normal_pdf(0.0) == pytest.approx(1.0 / np.sqrt(2 * np.pi))


@settings(max_examples=50, deadline=None)
@given(x=st.floats(-8.0, 8.0))
def test_std_normal_symmetry(x):
    assert abs(std_normal_cdf(x) + std_normal_cdf(-x) - 1.0) <= 1e-15


@settings(max_examples=50, deadline=None)
@given(q=st.floats(1e-10, 1.0 - 1e-10))
def test_std_normal_round_trip(q):
    assert std_normal_cdf(std_normal_quantile(q)) == pytest.approx(q, rel=1e-12, abs=1e-15)


def test_normal_cond_requires_positive_sd():
    with pytest.raises(DomainError):
        NormalCond(mean=0.0, sd=0.0)
