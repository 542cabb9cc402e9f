"""Tests du modèle mixte : F_Z, f_Z, quantiles, gradients et courbes de période de retour."""

import numpy as np
import pytest
from scipy import integrate, special

from mevforge.core.distributions import (
    GevParams,
    ParetoPoissonParams,
    gev_cdf,
    gev_pdf,
    gev_quantile,
    pp_cdf,
)
from mevforge.core.exceptions import DomainError, NumericError
from mevforge.core.fitting import ev_quantile_band, fit_gev, fit_pareto_poisson
from mevforge.core.hetreg import fit_hetreg
from mevforge.core.mixed import (
    MixedModel,
    empirical_return_periods,
    mixed_cdf,
    mixed_pdf,
    mixed_quantile,
    quantile_bands,
    quantile_gradient,
    return_period_curve,
)
from mevforge.core.simulate import SimulationConfig, make_rng, sample_mixed, simulate

from .conftest import CASE1_BETA, CASE1_GEV, make_mixed

pytestmark = pytest.mark.filterwarnings("ignore:f_σ ≤ 0:RuntimeWarning")

Z_GRID = np.array([6.0, 8.0, 10.0, 12.0, 15.0])


# ---- Cas dégénéré : Y ≈ 0 ----

def test_degenerate_cdf_matches_gev(degenerate_mixed):
    np.testing.assert_allclose(mixed_cdf(Z_GRID, degenerate_mixed), gev_cdf(Z_GRID, CASE1_GEV), atol=1e-6)


def test_degenerate_pdf_matches_gev(degenerate_mixed):
    np.testing.assert_allclose(mixed_pdf(Z_GRID, degenerate_mixed), gev_pdf(Z_GRID, CASE1_GEV), atol=1e-5)


def test_degenerate_quantile_matches_gev(degenerate_mixed):
    assert mixed_quantile(0.98, degenerate_mixed) == pytest.approx(gev_quantile(0.98, CASE1_GEV), abs=1e-6)


# ---- F_Z et f_Z ----

def test_cdf_limits(shifted_mixed):
    values = mixed_cdf(np.array([-1e6, 1e6]), shifted_mixed)
    assert values[0] == pytest.approx(0.0, abs=1e-9)
    assert values[1] == pytest.approx(1.0, abs=1e-9)


def test_cdf_scalar_and_vector_agree(shifted_mixed):
    vector = mixed_cdf(Z_GRID, shifted_mixed)
    assert isinstance(mixed_cdf(10.0, shifted_mixed), float)
    assert mixed_cdf(10.0, shifted_mixed) == pytest.approx(vector[2], abs=1e-10)
    assert np.all(np.diff(vector) > 0)


def test_shifted_model_is_a_convolution(shifted_mixed):
    """Z = X + 0.5 + 0.7ε : F_Z(z) = E[Φ((z - X - 0.5)/0.7)] calculé indépendamment"""
    z = 13.0
    lo, hi = gev_quantile(1e-14, CASE1_GEV), CASE1_GEV.support()[1]
    expected, _ = integrate.quad(lambda x: gev_pdf(x, CASE1_GEV) * special.ndtr((z - x - 0.5) / 0.7), lo, hi,
                                 epsabs=1e-12, limit=200)
    assert mixed_cdf(z, shifted_mixed) == pytest.approx(expected, abs=1e-8)


def test_pdf_is_nonnegative_and_normalized(shifted_mixed):
    grid = np.linspace(0.0, 35.0, 24)
    assert np.all(mixed_pdf(grid, shifted_mixed) >= 0.0)
    total, _ = integrate.quad(lambda z: mixed_pdf(z, shifted_mixed), -5.0, 45.0, epsabs=1e-9, limit=100)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_clamped_sd_emits_warning(case1_mixed):
    with pytest.warns(RuntimeWarning, match="f_σ ≤ 0"):
        mixed_cdf(15.0, case1_mixed)


def test_pareto_poisson_atom(config):
    """Y ≈ 0 : F_Z se confond avec la loi Pareto-Poisson, atome exp(-λ) compris"""
    ev = ParetoPoissonParams(lam=0.5, logpsi=0.0, xi=0.1, u=2.0)
    m = make_mixed(ev, (0.0, 0.0, 1e-10, 0.0), config)
    z = np.array([2.5, 4.0, 7.0])
    np.testing.assert_allclose(mixed_cdf(z, m), pp_cdf(z, ev), atol=1e-6)
    assert mixed_cdf(1.5, m) == pytest.approx(0.0, abs=1e-9)


# ---- Quantiles ----

@pytest.mark.parametrize("q", [0.5, 0.9, 0.98, 0.998])
def test_quantile_round_trip(shifted_mixed, q):
    z_q = mixed_quantile(q, shifted_mixed)
    assert mixed_cdf(z_q, shifted_mixed) == pytest.approx(q, abs=1e-8)


def test_quantile_rejects_invalid_probability(shifted_mixed):
    with pytest.raises(DomainError):
        mixed_quantile(1.0, shifted_mixed)


def test_quantile_gradient_of_location_shifts(shifted_mixed):
    """Z = X + β₀ + β₂ε : ∂z_q/∂μ = ∂z_q/∂β₀ = 1"""
    grad = quantile_gradient(0.98, shifted_mixed)
    names = shifted_mixed.param_names
    assert grad[names.index("mu")] == pytest.approx(1.0, abs=1e-4)
    assert grad[names.index("beta0")] == pytest.approx(1.0, abs=1e-4)


def test_implicit_gradient_matches_resolved_quantiles(case1_mixed):
    implicit = quantile_gradient(0.98, case1_mixed, method="implicit")
    resolved = quantile_gradient(0.98, case1_mixed, method="resolve")
    np.testing.assert_allclose(implicit, resolved, rtol=1e-4, atol=1e-4)


def test_unknown_gradient_method(shifted_mixed):
    with pytest.raises(DomainError):
        quantile_gradient(0.9, shifted_mixed, method="secant", z_q=12.0)


# ---- Bandes ----

def test_band_collapses_without_uncertainty(config):
    m = make_mixed(CASE1_GEV, (0.5, 0.0, 0.7, 0.0), config)
    band = quantile_bands(0.9, m)
    assert band.lo == band.value == band.hi


def test_band_scales_with_covariance(shifted_mixed):
    base = quantile_bands(0.98, shifted_mixed)
    scaled = quantile_bands(0.98, shifted_mixed.with_covariance_scale(4.0))
    assert scaled.value == base.value
    assert (scaled.hi - scaled.value) == pytest.approx(2.0 * (base.hi - base.value), rel=1e-9)


def test_joint_covariance_is_block_diagonal(shifted_mixed):
    cov = shifted_mixed.joint_covariance
    assert cov.shape == (7, 7)
    assert np.all(cov[:3, 3:] == 0.0)


def test_from_fits_requires_valid_covariances(case1_sample, config):
    ev_fit = fit_gev(case1_sample.x_max[:100], config)
    reg_fit = fit_hetreg(case1_sample.paired(), "linear", config)
    reg_fit.covariance_valid = False
    with pytest.raises(NumericError):
        MixedModel.from_fits(ev_fit, reg_fit, config)


# ---- Courbes ----

def test_return_period_curve(shifted_mixed):
    curve = return_period_curve(shifted_mixed, [50, 2, 10])
    frame = curve.to_frame()
    assert list(frame["T"]) == [2.0, 10.0, 50.0]
    assert frame["q"].iloc[0] == 0.5
    assert np.all(np.diff(frame["quantile"]) > 0)
    assert np.all((frame["lo"] <= frame["quantile"]) & (frame["quantile"] <= frame["hi"]))
    assert set(frame["model"]) == {"MODEL(z)"}


def test_return_period_must_exceed_one(shifted_mixed):
    with pytest.raises(DomainError):
        return_period_curve(shifted_mixed, [1.0, 10.0])


def test_empirical_return_periods():
    table = empirical_return_periods([3.0, 1.0, 2.0])
    np.testing.assert_allclose(table["T"], [4.0 / 3.0, 2.0, 4.0])
    np.testing.assert_allclose(table["value"], [1.0, 2.0, 3.0])


# ---- Oracles par simulation ----

def test_cdf_matches_brute_force_sampling(case1_mixed):
    z = sample_mixed(case1_mixed, 10 ** 6, seed=2)
    grid = np.quantile(z, np.linspace(0.1, 0.9, 9))
    empirical = np.searchsorted(np.sort(z), grid, side="right") / z.size
    np.testing.assert_allclose(mixed_cdf(grid, case1_mixed), empirical, atol=0.002)


def test_mixed_quantile_close_to_direct_gev_on_case1(config):
    sample = simulate(SimulationConfig.case1(years=1000, seed=3))
    ev_fit = fit_gev(sample.x_max, config)
    reg_fit = fit_hetreg(sample.paired(), "linear", config)
    m = MixedModel.from_fits(ev_fit, reg_fit, config)
    direct = fit_gev(sample.z_max, config).model.quantile(0.98)
    assert abs(mixed_quantile(0.98, m) - direct) <= 0.03 * direct


@pytest.mark.slow
def test_case1_quantile_agreement_over_seeds(config):
    """Sur plusieurs graines, le quantile mixte reste à 2 % de la GEV directe dans la grande majorité des cas"""
    close = 0
    for seed in range(10):
        sample = simulate(SimulationConfig.case1(years=1000, seed=seed))
        m = MixedModel.from_fits(fit_gev(sample.x_max, config),
                                 fit_hetreg(sample.paired(), "linear", config), config)
        direct = fit_gev(sample.z_max, config).model.quantile(0.98)
        close += abs(mixed_quantile(0.98, m) - direct) <= 0.02 * direct
    assert close >= 8


@pytest.mark.slow
def test_band_coverage_case1(config):
    """Couverture empirique de la bande à 95 % du quantile 0.98 (Cas 1, 100 années appariées)"""
    truth = make_mixed(CASE1_GEV, (-0.5, 0.7, -0.3, 0.1), config)
    z_true = mixed_quantile(0.98, truth)
    covered = 0
    runs = 40
    for seed in range(runs):
        sample = simulate(SimulationConfig.case1(years=1000, seed=100 + seed, paired_years=100))
        m = MixedModel.from_fits(fit_gev(sample.x_max, config),
                                 fit_hetreg(sample.paired(), "linear", config), config)
        band = quantile_bands(0.98, m)
        covered += band.lo <= z_true <= band.hi
    assert covered / runs >= 0.8


# ---- Cohérence numérique ----

@pytest.mark.parametrize("q", [0.2, 0.5, 0.9, 0.98])
def test_pdf_matches_cdf_derivative(case1_mixed, q):
    z = mixed_quantile(q, case1_mixed)
    h = 1e-3
    slope = (mixed_cdf(z + h, case1_mixed) - mixed_cdf(z - h, case1_mixed)) / (2 * h)
    assert mixed_pdf(z, case1_mixed) == pytest.approx(slope, rel=1e-5)


def test_quantile_gradient_against_wider_steps(case1_mixed):
    """Différences centrées indépendantes, pas relatif 1e-5, quantile résolu à chaque perturbation"""
    q = 0.98
    gamma = case1_mixed.parameter_vector()
    expected = np.zeros(gamma.size)
    for j in range(gamma.size):
        step = 1e-5 * max(abs(gamma[j]), 1.0)
        up, down = gamma.copy(), gamma.copy()
        up[j] += step
        down[j] -= step
        expected[j] = (mixed_quantile(q, case1_mixed.with_parameters(up))
                       - mixed_quantile(q, case1_mixed.with_parameters(down))) / (2 * step)
    np.testing.assert_allclose(quantile_gradient(q, case1_mixed), expected, rtol=1e-3, atol=1e-3)


def _perturbed_case1(rng, config):
    ev = GevParams(mu=10.0 + rng.normal(0.0, 0.5), logpsi=0.5 + rng.normal(0.0, 0.1),
                   xi=-0.15 + rng.normal(0.0, 0.1))
    beta = np.array(CASE1_BETA) + rng.normal(0.0, [0.2, 0.05, 0.1, 0.02])
    return make_mixed(ev, tuple(beta), config)


@pytest.mark.parametrize("models", [3, pytest.param(100, marks=pytest.mark.slow)])
def test_cdf_is_monotone_on_grid(config, models):
    rng = make_rng(31)
    grid = np.linspace(0.0, 40.0, 401)
    for _ in range(models):
        values = np.asarray(mixed_cdf(grid, _perturbed_case1(rng, config)))
        assert np.all((values >= 0.0) & (values <= 1.0))
        assert np.all(np.diff(values) >= -1e-10)


# ---- Comparaison avec la GEV directe sur z ----

@pytest.mark.parametrize("seeds", [(100,), pytest.param(tuple(range(100, 106)), marks=pytest.mark.slow)])
def test_mixed_band_narrower_than_direct_gev(config, seeds):
    """100 années appariées, 1000 années de x : écart-type du quantile 0.98 plus petit que celui de GEV(z)"""
    for seed in seeds:
        sample = simulate(SimulationConfig.case1(years=1000, seed=seed, paired_years=100))
        m = MixedModel.from_fits(fit_gev(sample.x_max, config),
                                 fit_hetreg(sample.paired(), "linear", config), config)
        direct = ev_quantile_band(fit_gev(sample.paired().z, config), 0.98)
        assert quantile_bands(0.98, m).se < direct.se


@pytest.mark.slow
def test_band_covers_empirical_points_case2(config):
    """Cas 2 : les maxima appariés de période 2 à 50 ans tombent dans la bande à 95 % du modèle mixte"""
    periods = np.geomspace(2.0, 50.0, 12)
    inside = total = 0
    for seed in range(5):
        sample = simulate(SimulationConfig.case2(years=1000, seed=200 + seed))
        ev_fit = fit_pareto_poisson(sample.exceedances, years=1000, u=2.5, config=config)
        m = MixedModel.from_fits(ev_fit, fit_hetreg(sample.paired(), "linear", config), config)
        frame = return_period_curve(m, periods).to_frame()
        empirical = empirical_return_periods(sample.paired().z)
        points = empirical[(empirical["T"] >= 2.0) & (empirical["T"] <= 50.0)]
        log_t = np.log(points["T"])
        lo = np.interp(log_t, np.log(frame["T"]), frame["lo"])
        hi = np.interp(log_t, np.log(frame["T"]), frame["hi"])
        inside += int(np.sum((points["value"] >= lo) & (points["value"] <= hi)))
        total += len(points)
    assert inside / total >= 0.85
