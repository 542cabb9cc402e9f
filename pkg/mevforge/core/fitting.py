"""
Estimation par maximum de vraisemblance des modèles VE, information de Fisher
numérique et intervalles de confiance des paramètres.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numdifftools as nd
import numpy as np
from scipy import linalg, optimize, stats

from .distributions import GevParams, ParetoPoissonParams, gev_loglik, gpd_loglik
from .exceptions import DomainError, FitError, NumericError
from ..utils.config import AnalysisConfig, get_config

logger = logging.getLogger(__name__)

GRADIENT_STEP = 1e-7
HESSIAN_STEP = 1e-5


@dataclass
class FitResult:
    """Résultat d'un ajustement par maximum de vraisemblance"""

    estimates: np.ndarray
    loglik: float
    covariance: np.ndarray
    converged: bool
    iterations: int
    names: Tuple[str, ...]
    n_obs: int
    free: np.ndarray
    covariance_valid: bool = True
    message: str = ""
    model: Any = None

    @property
    def se(self) -> np.ndarray:
        """Écarts-types (racine de la diagonale de la covariance)"""
        if not self.covariance_valid:
            return np.full(self.estimates.size, np.nan)
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))

    @property
    def n_free(self) -> int:
        return int(np.sum(self.free))

    def summary(self, alpha: float = 0.05) -> Dict[str, Any]:
        """Estimations, écarts-types et intervalles ; ψ rapporté aussi en échelle naturelle"""
        params: Dict[str, Any] = {}
        intervals = None
        if self.covariance_valid and self.n_obs - self.n_free - 1 > 0:
            intervals = param_ci(self, alpha)
        for j, name in enumerate(self.names):
            entry = {
                "estimate": float(self.estimates[j]),
                "se": float(self.se[j]),
                "fixed": not bool(self.free[j]),
            }
            if intervals is not None:
                entry["lo"] = intervals[j].lower
                entry["hi"] = intervals[j].upper
            params[name] = entry
            if name == "logpsi":
                psi = {"estimate": float(np.exp(self.estimates[j]))}
                if intervals is not None:
                    psi["lo"] = float(np.exp(intervals[j].lower))
                    psi["hi"] = float(np.exp(intervals[j].upper))
                params["psi"] = psi
        return {
            "parameters": params,
            "loglik": float(self.loglik),
            "converged": bool(self.converged),
            "covariance_valid": bool(self.covariance_valid),
            "iterations": int(self.iterations),
            "n_obs": int(self.n_obs),
            "message": self.message,
            "covariance": self.covariance.tolist(),
        }


@dataclass(frozen=True)
class ConfidenceInterval:
    """Intervalle de confiance d'un paramètre"""

    lower: float
    upper: float
    level: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise NumericError(f"Intervalle incohérent: [{self.lower}, {self.upper}]")


@dataclass(frozen=True)
class QuantileBand:
    """Quantile et sa bande de confiance par la méthode delta"""

    q: float
    value: float
    lo: float
    hi: float
    se: float


@dataclass
class ShapeSelection:
    """Comparaison GEV / Gumbel (ou GPD / exponentielle) par rapport de vraisemblance"""

    full: FitResult
    restricted: FitResult
    statistic: float
    p_value: float
    alpha: float
    restricted_chosen: bool = field(default=False)

    @property
    def chosen(self) -> FitResult:
        return self.restricted if self.restricted_chosen else self.full


# ---------------------------------------------------------------------------
# Dérivées numériques et information de Fisher
# ---------------------------------------------------------------------------

def _scaled(fn: Callable[[np.ndarray], float], theta: np.ndarray,
            free: Optional[np.ndarray]) -> Tuple[Callable[[np.ndarray], float], np.ndarray, np.ndarray]:
    """
    Restreint fn aux paramètres libres, en coordonnées s = (θⱼ - θ̂ⱼ) / max(|θ̂ⱼ|,1).

    Un pas fixe en s correspond au pas h·max(|θⱼ|,1) en θ.
    """
    theta = np.asarray(theta, dtype=float)
    free = np.ones(theta.size, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    idx = np.flatnonzero(free)
    scale = np.maximum(np.abs(theta[idx]), 1.0)

    def restricted(s: np.ndarray) -> float:
        point = theta.copy()
        point[idx] = theta[idx] + np.atleast_1d(s) * scale
        return fn(point)

    return restricted, idx, scale


def loglik_gradient(fn: Callable[[np.ndarray], float], theta: np.ndarray,
                    free: Optional[np.ndarray] = None) -> np.ndarray:
    """Gradient centré (numdifftools) ; composantes figées (free=False) nulles"""
    restricted, idx, scale = _scaled(fn, theta, free)
    grad = np.zeros(np.size(theta))
    if idx.size:
        values = nd.Gradient(restricted, step=GRADIENT_STEP, method="central")(np.zeros(idx.size))
        grad[idx] = np.asarray(values, dtype=float).reshape(idx.size) / scale
    return grad


def loglik_hessian(fn: Callable[[np.ndarray], float], theta: np.ndarray,
                   free: Optional[np.ndarray] = None) -> np.ndarray:
    """Hessienne centrée (numdifftools), symétrisée ; lignes et colonnes figées nulles"""
    restricted, idx, scale = _scaled(fn, theta, free)
    n = np.size(theta)
    hess = np.zeros((n, n))
    if idx.size:
        values = nd.Hessian(restricted, step=HESSIAN_STEP, method="central")(np.zeros(idx.size))
        sub = np.asarray(values, dtype=float).reshape(idx.size, idx.size) / np.outer(scale, scale)
        hess[np.ix_(idx, idx)] = 0.5 * (sub + sub.T)
    return hess


def fisher_information(loglik_fn: Callable[[np.ndarray], float], theta_hat: np.ndarray,
                       free: Optional[np.ndarray] = None) -> np.ndarray:
    """Opposé de la hessienne numérique de la log-vraisemblance en theta_hat"""
    return -loglik_hessian(loglik_fn, np.asarray(theta_hat, dtype=float), free)


def covariance_from_information(information: np.ndarray,
                                free: Optional[np.ndarray] = None) -> Tuple[np.ndarray, bool]:
    """
    Inverse de l'information restreinte aux paramètres libres.

    Une matrice non définie positive est signalée (valid=False) ; aucune
    pseudo-inverse n'est tentée.
    """
    n = information.shape[0]
    free = np.ones(n, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    idx = np.flatnonzero(free)
    covariance = np.zeros((n, n))
    if idx.size == 0:
        return covariance, True
    sub = information[np.ix_(idx, idx)]
    if not np.all(np.isfinite(sub)):
        return np.full((n, n), np.nan), False
    try:
        factor = linalg.cho_factor(sub)
    except linalg.LinAlgError:
        return np.full((n, n), np.nan), False
    inverse = linalg.cho_solve(factor, np.eye(idx.size))
    covariance[np.ix_(idx, idx)] = 0.5 * (inverse + inverse.T)
    return covariance, True


def t_multiplier(alpha: float, dof: int) -> float:
    """Quantile (1-α/2) de Student à dof degrés de liberté"""
    if dof <= 0:
        raise DomainError(f"Degrés de liberté insuffisants: {dof}")
    return float(stats.t.ppf(1.0 - alpha / 2.0, dof))


def param_ci(fit: FitResult, alpha: float = 0.05, n_obs: Optional[int] = None) -> List[ConfidenceInterval]:
    """θ̂ⱼ ± t(1-α/2, n-n_p-1)·σ̂ⱼ"""
    if not fit.covariance_valid:
        raise NumericError("Covariance invalide : intervalles indisponibles")
    n_obs = fit.n_obs if n_obs is None else n_obs
    t_value = t_multiplier(alpha, n_obs - fit.n_free - 1)
    return [
        ConfidenceInterval(lower=float(est - t_value * se), upper=float(est + t_value * se), level=1.0 - alpha)
        for est, se in zip(fit.estimates, fit.se)
    ]


# ---------------------------------------------------------------------------
# Moteur d'optimisation : simplexe puis polissage de Newton
# ---------------------------------------------------------------------------

def _scaled_gradient_norm(grad: np.ndarray, theta: np.ndarray, loglik: float) -> float:
    return float(np.max(np.abs(grad * np.maximum(np.abs(theta), 1.0))) / max(abs(loglik), 1.0))


def _newton_polish(loglik: Callable[[np.ndarray], float], theta: np.ndarray, free: np.ndarray,
                   tol: float, max_iter: int = 50) -> Tuple[np.ndarray, float, bool, int]:
    """Itérations de Newton avec demi-pas ; ne dégrade jamais la vraisemblance"""
    current = loglik(theta)
    idx = np.flatnonzero(free)
    for iteration in range(max_iter):
        grad = loglik_gradient(loglik, theta, free)
        if not np.all(np.isfinite(grad)):
            return theta, current, False, iteration
        if _scaled_gradient_norm(grad, theta, current) < tol:
            return theta, current, True, iteration
        hess = loglik_hessian(loglik, theta, free)[np.ix_(idx, idx)]
        if not np.all(np.isfinite(hess)):
            return theta, current, False, iteration
        try:
            factor = linalg.cho_factor(-hess)
        except linalg.LinAlgError:
            return theta, current, False, iteration
        step = np.zeros_like(theta)
        step[idx] = linalg.cho_solve(factor, grad[idx])
        scale = 1.0
        for _ in range(30):
            candidate = theta + scale * step
            value = loglik(candidate)
            if np.isfinite(value) and value >= current:
                break
            scale *= 0.5
        else:
            return theta, current, False, iteration
        theta, current = candidate, value
    grad = loglik_gradient(loglik, theta, free)
    return theta, current, _scaled_gradient_norm(grad, theta, current) < tol, max_iter


def maximize_loglik(loglik: Callable[[np.ndarray], float], starts: Sequence[np.ndarray],
                    free: Optional[np.ndarray] = None,
                    config: Optional[AnalysisConfig] = None) -> Tuple[np.ndarray, float, bool, int, str]:
    """
    Maximise loglik à partir de plusieurs points de départ.

    Nelder-Mead depuis chaque départ admissible (le meilleur est gardé), polissage de
    Newton, puis redémarrages depuis le meilleur point tant que le gradient relatif
    n'est pas sous config.gradient_tol.

    Returns:
        (theta, loglik, converged, iterations, message)
    """
    config = config or get_config()
    starts = [np.asarray(s, dtype=float) for s in starts]
    free = np.ones(starts[0].size, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    idx = np.flatnonzero(free)

    def negative(template: np.ndarray) -> Callable[[np.ndarray], float]:
        def objective(values: np.ndarray) -> float:
            point = template.copy()
            point[idx] = values
            value = loglik(point)
            return -value if np.isfinite(value) else np.inf
        return objective

    def simplex(start: np.ndarray) -> Tuple[np.ndarray, float, int]:
        result = optimize.minimize(
            negative(start), start[idx], method="Nelder-Mead",
            options={"maxiter": config.max_iterations, "xatol": 1e-10, "fatol": 1e-12,
                     "adaptive": idx.size > 2},
        )
        point = start.copy()
        point[idx] = result.x
        return point, -float(result.fun), int(result.nit)

    admissible = [s for s in starts if np.isfinite(loglik(s))]
    if not admissible:
        raise FitError("Aucun point de départ admissible pour la vraisemblance")

    iterations = 0
    best_theta, best_ll = None, -np.inf
    for start in admissible:
        theta, value, nit = simplex(start)
        iterations += nit
        if value > best_ll:
            best_theta, best_ll = theta, value
    if best_theta is None:
        raise FitError("Le simplexe n'a trouvé aucun point de vraisemblance finie")

    converged = False
    for restart in range(config.max_restarts + 1):
        best_theta, best_ll, converged, nit = _newton_polish(loglik, best_theta, free, config.gradient_tol)
        iterations += nit
        if converged:
            break
        if restart < config.max_restarts:
            logger.debug("🔧 Redémarrage %d du simplexe (ℓ=%.6f)", restart + 1, best_ll)
            theta, value, nit = simplex(best_theta)
            iterations += nit
            if value >= best_ll:
                best_theta, best_ll = theta, value

    message = "convergé" if converged else "gradient relatif au-dessus de la tolérance"
    return best_theta, best_ll, converged, iterations, message


def _finish_fit(loglik: Callable[[np.ndarray], float], theta: np.ndarray, value: float,
                converged: bool, iterations: int, message: str, names: Tuple[str, ...],
                n_obs: int, free: np.ndarray, model: Any) -> FitResult:
    information = fisher_information(loglik, theta, free)
    covariance, valid = covariance_from_information(information, free)
    if not valid:
        converged = False
        message = "hessienne non définie négative : covariance invalide"
    return FitResult(
        estimates=theta, loglik=value, covariance=covariance, converged=converged,
        iterations=iterations, names=names, n_obs=n_obs, free=free,
        covariance_valid=valid, message=message, model=model,
    )


# ---------------------------------------------------------------------------
# GEV
# ---------------------------------------------------------------------------

def _validated_sample(sample: Sequence[float], floor: int, label: str) -> np.ndarray:
    x = np.asarray(sample, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise FitError(f"Valeurs non finies dans l'échantillon {label}")
    if x.size < floor:
        raise FitError(f"Échantillon {label} trop court: {x.size} < {floor}")
    if np.ptp(x) == 0.0:
        raise FitError(f"Échantillon {label} dégénéré (toutes les valeurs égales)")
    return x


def fit_gev(maxima: Sequence[float], config: Optional[AnalysisConfig] = None,
            fix_shape: bool = False) -> FitResult:
    """
    Ajuste une GEV (μ, log ψ, ξ) par maximum de vraisemblance.

    Départ : moments de Gumbel (ψ₀ = s√6/π, μ₀ = x̄ - 0.5772ψ₀) avec ξ₀ = ±0.1.
    Avec fix_shape=True, ξ est figé à 0 (Gumbel).
    """
    config = config or get_config()
    x = _validated_sample(maxima, config.min_ev_obs, "GEV")

    psi0 = np.std(x, ddof=1) * np.sqrt(6.0) / np.pi
    mu0 = np.mean(x) - np.euler_gamma * psi0
    if fix_shape:
        starts = [np.array([mu0, np.log(psi0), 0.0])]
    else:
        starts = [np.array([mu0, np.log(psi0), xi0]) for xi0 in (0.1, -0.1)]
        if not any(np.isfinite(gev_loglik(x, GevParams(*s))) for s in starts):
            starts.append(np.array([mu0, np.log(psi0), 0.0]))
    free = np.array([True, True, not fix_shape])

    def loglik(theta: np.ndarray) -> float:
        return gev_loglik(x, GevParams(*theta))

    theta, value, converged, iterations, message = maximize_loglik(loglik, starts, free, config)
    fit = _finish_fit(loglik, theta, value, converged, iterations, message,
                      GevParams.param_names, x.size, free, GevParams(*theta))
    status = "✅" if fit.converged else "⚠️"
    logger.info("%s Ajustement %s: μ=%.4f, log ψ=%.4f, ξ=%.4f (ℓ=%.4f)", status,
                "Gumbel" if fix_shape else "GEV", *fit.estimates, fit.loglik)
    return fit


# ---------------------------------------------------------------------------
# Pareto-Poisson
# ---------------------------------------------------------------------------

def fit_pareto_poisson(exceedances: Sequence[float], years: int, u: float,
                       counts: Optional[Sequence[int]] = None,
                       config: Optional[AnalysisConfig] = None,
                       fix_shape: bool = False) -> FitResult:
    """
    Ajuste le modèle Pareto-Poisson (λ, log ψ, ξ) au seuil u fixé.

    λ̂ = nombre de dépassements / années (EMV de Poisson explicite) ; (log ψ, ξ)
    maximisent la vraisemblance GPD des excès. La covariance est bloc-diagonale entre λ
    et les paramètres GPD.
    """
    config = config or get_config()
    x = np.asarray(exceedances, dtype=float).ravel()
    if years < 1:
        raise DomainError(f"Le nombre d'années doit être ≥ 1, reçu {years}")
    if x.size == 0:
        raise FitError("Aucun dépassement du seuil")
    if np.any(x <= u):
        raise DomainError(f"Tous les dépassements doivent être > u={u}")
    if counts is not None:
        counts = np.asarray(counts, dtype=float)
        if counts.sum() != x.size or counts.size != years:
            raise DomainError("Comptes annuels incohérents avec les dépassements et les années")

    n = x.size
    lam = n / years
    excess = x - u

    mean = float(np.mean(excess))
    var = float(np.var(excess, ddof=1)) if n > 1 else mean ** 2
    if fix_shape:
        starts = [np.array([lam, np.log(mean), 0.0])]
    else:
        ratio = mean ** 2 / var if var > 0 else 1.0
        starts = [np.array([lam, np.log(mean), xi0]) for xi0 in (0.1, -0.1)]
        starts.append(np.array([lam, np.log(0.5 * mean * (1.0 + ratio)), 0.5 * (1.0 - ratio)]))
        starts.append(np.array([lam, np.log(mean), 0.0]))
    free = np.array([False, True, not fix_shape])

    if counts is None:
        poisson = n * np.log(lam * years) - lam * years - float(np.sum(np.log(np.arange(1, n + 1))))
    else:
        poisson = float(stats.poisson.logpmf(counts, lam).sum())

    def loglik(theta: np.ndarray) -> float:
        return gpd_loglik(excess, theta[1], theta[2])

    theta, value, converged, iterations, message = maximize_loglik(loglik, starts, free, config)
    model = ParetoPoissonParams(lam=lam, logpsi=float(theta[1]), xi=float(theta[2]), u=float(u))
    fit = _finish_fit(loglik, theta, value, converged, iterations, message,
                      ParetoPoissonParams.param_names, n, free, model)
    # Information de Poisson : années/λ
    fit.covariance[0, 0] = lam / years
    fit.free = np.array([True, True, not fix_shape])
    fit.loglik = value + poisson
    status = "✅" if fit.converged else "⚠️"
    logger.info("%s Ajustement Pareto-Poisson: λ=%.4f, log ψ=%.4f, ξ=%.4f (u=%g)", status,
                lam, theta[1], theta[2], u)
    return fit


# ---------------------------------------------------------------------------
# Sélection Gumbel et quantiles VE
# ---------------------------------------------------------------------------

def select_shape(full: FitResult, restricted: FitResult, alpha: float = 0.05) -> ShapeSelection:
    """Test du rapport de vraisemblance ξ=0 contre ξ libre, χ²(1)"""
    statistic = max(2.0 * (full.loglik - restricted.loglik), 0.0)
    p_value = float(stats.chi2.sf(statistic, 1))
    selection = ShapeSelection(full=full, restricted=restricted, statistic=statistic,
                               p_value=p_value, alpha=alpha,
                               restricted_chosen=p_value >= alpha and restricted.converged)
    logger.info("🔧 Rapport de vraisemblance ξ=0: LR=%.4f, p=%.4f → %s", statistic, p_value,
                "ξ=0 retenu" if selection.restricted_chosen else "ξ libre retenu")
    return selection


def select_gumbel(sample: Sequence[float], gev_fit: Optional[FitResult] = None,
                  alpha: float = 0.05, config: Optional[AnalysisConfig] = None) -> ShapeSelection:
    """Ajuste GEV et Gumbel sur le même échantillon et choisit au niveau alpha"""
    config = config or get_config()
    gev_fit = gev_fit or fit_gev(sample, config)
    gumbel_fit = fit_gev(sample, config, fix_shape=True)
    return select_shape(gev_fit, gumbel_fit, alpha)


def ev_quantile_band(fit: FitResult, q: float, alpha: float = 0.05) -> QuantileBand:
    """Bande delta du quantile VE avec le gradient analytique"""
    if not fit.covariance_valid:
        raise NumericError("Covariance invalide : bande de quantile indisponible")
    model = fit.model
    value = float(model.quantile(q))
    grad = np.asarray(model.quantile_gradient(q), dtype=float)
    variance = float(grad @ fit.covariance @ grad)
    if variance < -1e-12 * max(1.0, value ** 2):
        raise NumericError(f"Variance delta négative: {variance}")
    se = float(np.sqrt(max(variance, 0.0)))
    half = t_multiplier(alpha, fit.n_obs - fit.n_free - 1) * se
    return QuantileBand(q=float(q), value=value, lo=value - half, hi=value + half, se=se)
