"""Tests de la régression hétéroscédastique des différences y = z - x."""

import numpy as np
import pytest

from mevforge.core.exceptions import DomainError, FitError, NumericError
from mevforge.core.fitting import FitResult, t_multiplier
from mevforge.core.hetreg import (
    HetRegModel,
    PairedMaxima,
    RegressionFamily,
    fit_hetreg,
    hetreg_loglik,
    homoscedasticity_test,
    predict,
    regression_bands,
    studentized_residuals,
)

from mevforge.core.simulate import SimulationConfig, simulate

from .conftest import CASE1_BETA, CASE1_GEV


def _frozen_fit(model: HetRegModel, covariance: np.ndarray, n_obs: int = 30) -> FitResult:
    return FitResult(estimates=model.to_array(), loglik=0.0, covariance=covariance, converged=True,
                     iterations=0, names=HetRegModel.param_names, n_obs=n_obs,
                     free=np.ones(4, dtype=bool), model=model)


# ---- Prédiction ----

def test_predict_linear_identity():
    cond = predict(HetRegModel("linear", (0.0, 0.0, 1.0, 0.0)), 5.0)
    assert cond.mean == 0.0 and cond.sd == 1.0


def test_predict_power():
    cond = predict(HetRegModel("power", (1.0, 1.0, 1.0, 0.0)), 3.0)
    assert cond.mean == pytest.approx(3.0) and cond.sd == pytest.approx(1.0)


def test_predict_case1_at_ten():
    cond = predict(HetRegModel("linear", CASE1_BETA), 10.0)
    assert cond.mean == pytest.approx(6.5)
    assert cond.sd == pytest.approx(0.7)


def test_power_family_requires_positive_x():
    with pytest.raises(DomainError):
        HetRegModel("power", (1.0, 1.0, 1.0, 0.0)).mean(np.array([1.0, 0.0]))


def test_mean_gradient_power():
    model = HetRegModel("power", (2.0, 0.5, 1.0, 0.0))
    grad = model.mean_gradient(4.0)
    assert grad[0] == pytest.approx(2.0)
    assert grad[1] == pytest.approx(2.0 * 2.0 * np.log(4.0))
    assert grad[2] == grad[3] == 0.0


def test_sd_clamped_flags_nonpositive_values():
    sd, hit = HetRegModel("linear", CASE1_BETA).sd_clamped(np.array([2.0, 10.0]), 1e-6)
    assert hit
    np.testing.assert_allclose(sd, [1e-6, 0.7])


def test_loglik_barrier():
    x = np.array([1.0, 2.0, 5.0])
    assert hetreg_loglik(CASE1_BETA, RegressionFamily.LINEAR, x, np.zeros(3)) == -np.inf


# ---- Données appariées ----

def test_paired_maxima_validation():
    with pytest.raises(DomainError):
        PairedMaxima(x=[1.0, 2.0], y=[0.1], years=[2000, 2001])
    with pytest.raises(DomainError):
        PairedMaxima(x=[1.0, 2.0], y=[0.1, 0.2], years=[2000, 2000])
    pairs = PairedMaxima(x=[1.0, 2.0], y=[0.5, -0.5], years=[2000, 2001])
    np.testing.assert_allclose(pairs.z, [1.5, 1.5])
    assert len(pairs) == 2


# ---- Ajustement ----

def test_fit_hetreg_recovers_case1(case1_sample, config):
    data = case1_sample.paired()
    fit = fit_hetreg(data, RegressionFamily.LINEAR, config)
    assert fit.converged and fit.covariance_valid
    assert np.all(np.abs(fit.estimates - np.array(CASE1_BETA)) <= 4 * fit.se)
    assert fit.loglik >= hetreg_loglik(CASE1_BETA, RegressionFamily.LINEAR, data.x, data.y)


def test_fit_hetreg_power_family(case1_sample, config):
    fit = fit_hetreg(case1_sample.paired(), "power", config)
    assert fit.model.family is RegressionFamily.POWER
    assert np.all(np.asarray(fit.model.sd(case1_sample.paired().x)) > 0)


def test_fit_hetreg_degenerate_variance(config):
    data = PairedMaxima(x=np.linspace(1.0, 10.0, 20), y=np.full(20, 0.3), years=np.arange(2000, 2020))
    with pytest.raises(FitError, match="dégénérée"):
        fit_hetreg(data, "linear", config)


def test_fit_hetreg_too_short(config):
    data = PairedMaxima(x=np.arange(1.0, 6.0), y=np.arange(5.0) * 0.1, years=np.arange(2000, 2005))
    with pytest.raises(FitError):
        fit_hetreg(data, "linear", config)


def test_restricted_fit_is_nested(case1_sample, config):
    data = case1_sample.paired()
    full = fit_hetreg(data, "linear", config)
    restricted = fit_hetreg(data, "linear", config, fix_sd_slope=True)
    assert restricted.estimates[3] == 0.0
    assert restricted.loglik <= full.loglik + 1e-6


def test_homoscedasticity_rejected_on_case1(case1_sample, config):
    report = homoscedasticity_test(case1_sample.paired(), "linear", 0.05, config=config)
    assert report.name == "homoscedasticity_lr"
    assert report.statistic >= 0.0
    assert report.reject


@pytest.mark.parametrize("seeds, min_accepted", [
    (20, 15),
    pytest.param(100, 90, marks=pytest.mark.slow),
])
def test_homoscedasticity_accepted_when_sd_is_constant(config, seeds, min_accepted):
    """y généré avec β₃ = 0 : l'homoscédasticité est acceptée à 5 % pour la grande majorité des graines"""
    accepted = 0
    for seed in range(seeds):
        sample = simulate(SimulationConfig(case="custom", ev_params=CASE1_GEV, reg_params=(-0.5, 0.7, 0.6, 0.0),
                                           years=200, seed=500 + seed))
        accepted += not homoscedasticity_test(sample.paired(), "linear", 0.05, config=config).reject
    assert accepted >= min_accepted


# ---- Résidus et bandes ----

def test_studentized_residuals_zero_on_mean():
    model = HetRegModel("linear", (0.1, 0.5, 0.2, 0.05))
    x = np.linspace(1.0, 5.0, 6)
    data = PairedMaxima(x=x, y=model.mean(x), years=np.arange(2000, 2006))
    np.testing.assert_allclose(studentized_residuals(model, data), 0.0, atol=1e-15)
    shifted = PairedMaxima(x=x, y=np.asarray(model.mean(x)) + np.asarray(model.sd(x)), years=data.years)
    np.testing.assert_allclose(studentized_residuals(model, shifted), 1.0)


def test_studentized_residuals_reject_nonpositive_sd():
    data = PairedMaxima(x=[1.0, 2.0], y=[0.0, 0.0], years=[2000, 2001])
    with pytest.raises(NumericError):
        studentized_residuals(HetRegModel("linear", CASE1_BETA), data)


def test_bands_collapse_with_zero_covariance():
    model = HetRegModel("linear", (0.1, 0.5, 0.2, 0.05))
    bands = regression_bands(model, _frozen_fit(model, np.zeros((4, 4))), np.linspace(1.0, 5.0, 5))
    np.testing.assert_allclose(bands["mean_lo"], bands["mean"])
    np.testing.assert_allclose(bands["mean_hi"], bands["mean"])
    t_value = t_multiplier(0.05, 30 - 4 - 1)
    np.testing.assert_allclose(bands["pred_hi"] - bands["mean"], t_value * np.asarray(model.sd(bands["x"])))


def test_bands_linear_variance_formula():
    """Var(f_μ) = Σ₀₀ + 2xΣ₀₁ + x²Σ₁₁ pour la famille linéaire"""
    model = HetRegModel("linear", (0.1, 0.5, 0.2, 0.05))
    cov = np.diag([0.04, 0.01, 0.002, 0.0001])
    cov[0, 1] = cov[1, 0] = -0.005
    x = np.array([1.0, 3.0, 6.0])
    bands = regression_bands(model, _frozen_fit(model, cov), x)
    expected = t_multiplier(0.05, 25) * np.sqrt(0.04 + 2 * x * -0.005 + x ** 2 * 0.01)
    np.testing.assert_allclose(bands["mean_hi"] - bands["mean"], expected)
    assert np.all(bands["pred_hi"] > bands["mean_hi"])
    assert np.all(bands["pred_lo"] < bands["mean_lo"])
    assert list(bands.columns) == ["x", "mean", "mean_lo", "mean_hi", "pred_lo", "pred_hi"]
