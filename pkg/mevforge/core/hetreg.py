"""
Régression hétéroscédastique des différences y = z - x sur les maxima de réanalyse x.

Deux familles :
    linear : f_μ = β₀ + β₁x,   f_σ = β₂ + β₃x
    power  : f_μ = β₀x^β₁,     f_σ = β₂x^β₃
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from .distributions import ArrayLike, NormalCond, _as_output
from .exceptions import DomainError, FitError, NumericError
from .fitting import FitResult, _finish_fit, maximize_loglik, t_multiplier
from .reports import TestReport
from ..utils.config import AnalysisConfig, get_config

logger = logging.getLogger(__name__)


class RegressionFamily(str, Enum):
    """Familles de fonctions moyenne / écart-type"""

    LINEAR = "linear"
    POWER = "power"


@dataclass(frozen=True)
class HetRegModel:
    """Famille de régression et coefficients β = [β_μ ; β_σ]"""

    family: RegressionFamily
    beta: Tuple[float, float, float, float]

    param_names = ("beta0", "beta1", "beta2", "beta3")

    def __post_init__(self):
        object.__setattr__(self, "family", RegressionFamily(self.family))
        if len(self.beta) != 4:
            raise DomainError(f"β doit avoir 4 composantes, reçu {len(self.beta)}")
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))

    def _check_domain(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.family is RegressionFamily.POWER and np.any(x <= 0):
            raise DomainError("La famille puissance exige x > 0")
        return x

    def mean(self, x: ArrayLike) -> ArrayLike:
        """f_μ(x ; β_μ)"""
        x = self._check_domain(x)
        b0, b1 = self.beta[0], self.beta[1]
        if self.family is RegressionFamily.LINEAR:
            return _as_output(b0 + b1 * x)
        return _as_output(b0 * x ** b1)

    def sd(self, x: ArrayLike) -> ArrayLike:
        """f_σ(x ; β_σ), sans contrôle de signe"""
        x = self._check_domain(x)
        b2, b3 = self.beta[2], self.beta[3]
        if self.family is RegressionFamily.LINEAR:
            return _as_output(b2 + b3 * x)
        return _as_output(b2 * x ** b3)

    def sd_clamped(self, x: ArrayLike, floor: float) -> Tuple[ArrayLike, bool]:
        """f_σ avec les valeurs ≤ 0 remplacées par floor ; renvoie aussi l'indicateur de remplacement"""
        raw = np.asarray(self.sd(x), dtype=float)
        clamped = raw <= 0
        return _as_output(np.where(clamped, floor, raw)), bool(np.any(clamped))

    def mean_gradient(self, x: ArrayLike) -> np.ndarray:
        """∂f_μ/∂β, forme (4,) ou (4, len(x)) ; nul pour β_σ"""
        x = self._check_domain(x)
        zeros = np.zeros_like(x)
        if self.family is RegressionFamily.LINEAR:
            return np.array([np.ones_like(x), x, zeros, zeros])
        power = x ** self.beta[1]
        return np.array([power, self.beta[0] * power * np.log(x), zeros, zeros])

    def to_array(self) -> np.ndarray:
        return np.array(self.beta, dtype=float)

    def with_array(self, values) -> "HetRegModel":
        return HetRegModel(family=self.family, beta=tuple(float(v) for v in values))


@dataclass
class PairedMaxima:
    """Maxima de réanalyse x et différences y appariés par année"""

    x: np.ndarray
    y: np.ndarray
    years: np.ndarray
    unpaired_years: Tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.years = np.asarray(self.years, dtype=int)
        if not (self.x.size == self.y.size == self.years.size):
            raise DomainError("x, y et years doivent avoir la même longueur")
        if np.unique(self.years).size != self.years.size:
            raise DomainError("Chaque année doit apparaître une seule fois")

    def __len__(self) -> int:
        return int(self.x.size)

    @property
    def z(self) -> np.ndarray:
        """Maxima instrumentaux reconstruits z = x + y"""
        return self.x + self.y


def hetreg_loglik(beta: Sequence[float], family: RegressionFamily, x: np.ndarray, y: np.ndarray) -> float:
    """-Σ log f_σ - ½Σ((yᵢ - f_μ)/f_σ)² ; -inf si f_σ ≤ 0 en un point de l'échantillon"""
    model = HetRegModel(family=family, beta=tuple(beta))
    sd = np.asarray(model.sd(x), dtype=float)
    if np.any(~np.isfinite(sd)) or np.any(sd <= 0):
        return -np.inf
    resid = (y - np.asarray(model.mean(x), dtype=float)) / sd
    value = float(-np.sum(np.log(sd)) - 0.5 * np.sum(resid * resid))
    return value if np.isfinite(value) else -np.inf


def _ols_start(data: PairedMaxima, family: RegressionFamily) -> np.ndarray:
    """Moindres carrés pour β_μ, écart-type résiduel pour β₂, β₃ = 0"""
    x, y = data.x, data.y
    if family is RegressionFamily.LINEAR:
        slope, intercept = np.polyfit(x, y, 1)
        fitted = intercept + slope * x
        beta_mu = (intercept, slope)
    else:
        coef = float(np.dot(x, y) / np.dot(x, x))
        fitted = coef * x
        beta_mu = (coef, 1.0)
    resid_sd = float(np.std(y - fitted, ddof=1))
    return np.array([beta_mu[0], beta_mu[1], resid_sd, 0.0])


def fit_hetreg(data: PairedMaxima, family: RegressionFamily = RegressionFamily.LINEAR,
               config: Optional[AnalysisConfig] = None, fix_sd_slope: bool = False,
               start: Optional[np.ndarray] = None) -> FitResult:
    """
    Maximise la log-vraisemblance de la régression hétéroscédastique.

    Départ : moindres carrés ordinaires (modèle homoscédastique, toujours admissible).
    Avec fix_sd_slope=True, β₃ est figé à 0.
    """
    config = config or get_config()
    family = RegressionFamily(family)
    if len(data) < config.min_reg_obs:
        raise FitError(f"Échantillon apparié trop court: {len(data)} < {config.min_reg_obs}")
    if not (np.all(np.isfinite(data.x)) and np.all(np.isfinite(data.y))):
        raise FitError("Valeurs non finies dans l'échantillon apparié")
    if family is RegressionFamily.POWER and np.any(data.x <= 0):
        raise DomainError("La famille puissance exige x > 0 pour toutes les observations")
    if np.ptp(data.y) == 0.0:
        raise FitError("Variance dégénérée : toutes les différences y sont égales")

    initial = _ols_start(data, family)
    if initial[2] <= 0:
        raise FitError("Variance dégénérée : résidus des moindres carrés nuls")
    starts = [initial]
    if start is not None:
        starts.insert(0, np.asarray(start, dtype=float))
    if fix_sd_slope:
        starts = [np.array([s[0], s[1], s[2], 0.0]) for s in starts]
    free = np.array([True, True, True, not fix_sd_slope])

    def loglik(beta: np.ndarray) -> float:
        return hetreg_loglik(beta, family, data.x, data.y)

    theta, value, converged, iterations, message = maximize_loglik(loglik, starts, free, config)
    model = HetRegModel(family=family, beta=tuple(theta))

    sd = np.asarray(model.sd(data.x), dtype=float)
    if np.min(sd) < 1e-8 * max(float(np.std(data.y)), 1e-300):
        raise FitError("Variance dégénérée : f_σ tend vers 0 sur l'échantillon")

    fit = _finish_fit(loglik, theta, value, converged, iterations, message,
                      HetRegModel.param_names, len(data), free, model)
    status = "✅" if fit.converged else "⚠️"
    logger.info("%s Régression %s: β=(%s) (ℓ=%.4f)", status, family.value,
                ", ".join(f"{b:.4f}" for b in theta), fit.loglik)
    return fit


def predict(model: HetRegModel, x: ArrayLike) -> NormalCond:
    """Loi conditionnelle N(f_μ(x), f_σ(x)²) de Y|X=x"""
    return NormalCond(mean=model.mean(x), sd=model.sd(x))


def studentized_residuals(model: HetRegModel, data: PairedMaxima) -> np.ndarray:
    """
    (yᵢ - f_μ(xᵢ)) / √Ωᵢᵢ avec Ωᵢᵢ := f_σ(xᵢ)².

    L'inflation due à l'estimation des paramètres est ignorée (terme dominant seulement).
    """
    sd = np.asarray(model.sd(data.x), dtype=float)
    if np.any(sd <= 0):
        raise NumericError("f_σ ≤ 0 sur l'échantillon : résidus studentisés indéfinis")
    return (data.y - np.asarray(model.mean(data.x), dtype=float)) / sd


def regression_bands(model: HetRegModel, fit: FitResult, x_grid: ArrayLike,
                     alpha: float = 0.05, n_obs: Optional[int] = None) -> pd.DataFrame:
    """
    Bandes de confiance de la réponse moyenne (méthode delta sur f_μ) et bandes de
    prédiction (variance delta + f_σ²), multiplicateur de Student à n - n_p - 1 ddl.
    """
    if not fit.covariance_valid:
        raise NumericError("Covariance invalide : bandes de régression indisponibles")
    x = np.atleast_1d(np.asarray(x_grid, dtype=float))
    n_obs = fit.n_obs if n_obs is None else n_obs
    t_value = t_multiplier(alpha, n_obs - fit.n_free - 1)

    mean = np.asarray(model.mean(x), dtype=float).reshape(x.shape)
    grad = model.mean_gradient(x).reshape(4, -1)
    mean_var = np.einsum("in,ij,jn->n", grad, fit.covariance, grad)
    if np.any(mean_var < -1e-12):
        raise NumericError("Variance delta négative sur la grille")
    mean_var = np.maximum(mean_var, 0.0)
    sd = np.asarray(model.sd(x), dtype=float).reshape(x.shape)
    if np.any(sd <= 0):
        raise NumericError("f_σ ≤ 0 sur la grille : bande de prédiction indéfinie")

    mean_half = t_value * np.sqrt(mean_var)
    pred_half = t_value * np.sqrt(mean_var + sd ** 2)
    return pd.DataFrame({
        "x": x,
        "mean": mean,
        "mean_lo": mean - mean_half,
        "mean_hi": mean + mean_half,
        "pred_lo": mean - pred_half,
        "pred_hi": mean + pred_half,
    })


def homoscedasticity_test(data: PairedMaxima, family: RegressionFamily = RegressionFamily.LINEAR,
                          alpha: float = 0.05, fit: Optional[FitResult] = None,
                          config: Optional[AnalysisConfig] = None) -> TestReport:
    """Rapport de vraisemblance β₃ = 0 contre β₃ libre, loi χ²(1)"""
    config = config or get_config()
    full = fit or fit_hetreg(data, family, config)
    restricted = fit_hetreg(data, family, config, fix_sd_slope=True)
    if restricted.loglik > full.loglik:
        # Le modèle libre contient le modèle restreint : on repart de son optimum
        full = fit_hetreg(data, family, config, start=restricted.estimates)
    statistic = max(2.0 * (full.loglik - restricted.loglik), 0.0)
    report = TestReport.from_p_value("homoscedasticity_lr", statistic,
                                     float(stats.chi2.sf(statistic, 1)), alpha, dof=1)
    logger.info("🔧 Test d'homoscédasticité: LR=%.4f, p=%.4f", statistic, report.p_value)
    return report
