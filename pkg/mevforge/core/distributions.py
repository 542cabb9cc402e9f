"""
Primitives de probabilité : GEV, Pareto généralisée, Pareto-Poisson et loi normale standard.

Les paramètres d'échelle sont stockés en log(ψ). Toutes les fonctions acceptent des
scalaires ou des tableaux numpy et sont vectorisées.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from typing import Tuple, Union

import numpy as np
from scipy import special

from .exceptions import DomainError

ArrayLike = Union[float, np.ndarray]

# En dessous de ce seuil, (1+ξt)^(-1/ξ) souffre d'annulation : branche Gumbel
XI_TOL = 1e-8

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


def _as_output(values: np.ndarray) -> ArrayLike:
    """Rend un float pour une entrée scalaire, un tableau sinon"""
    values = np.asarray(values, dtype=float)
    return float(values) if values.ndim == 0 else values


def _check_probability(q: ArrayLike) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if not np.all((q > 0.0) & (q < 1.0)):
        raise DomainError(f"Probabilité hors de (0,1): {q}")
    return q


def _is_gumbel(xi: float) -> bool:
    return abs(xi) < XI_TOL


# ---------------------------------------------------------------------------
# Loi normale standard
# ---------------------------------------------------------------------------

def std_normal_cdf(x: ArrayLike) -> ArrayLike:
    """Φ(x)"""
    return _as_output(special.ndtr(np.asarray(x, dtype=float)))


def std_normal_pdf(x: ArrayLike) -> ArrayLike:
    """φ(x)"""
    x = np.asarray(x, dtype=float)
    return _as_output(np.exp(-0.5 * x * x - _LOG_SQRT_2PI))


def std_normal_quantile(q: ArrayLike) -> ArrayLike:
    """Φ⁻¹(q) pour q dans (0,1)"""
    return _as_output(special.ndtri(_check_probability(q)))


# ---------------------------------------------------------------------------
# Interface commune des modèles VE
# ---------------------------------------------------------------------------

class EvDistribution(ABC):
    """Interface abstraite pour les lois des maxima annuels"""

    kind: str = ""
    param_names: Tuple[str, ...] = ()

    @abstractmethod
    def cdf(self, x: ArrayLike) -> ArrayLike:
        """Fonction de répartition F_X"""

    @abstractmethod
    def pdf(self, x: ArrayLike) -> ArrayLike:
        """Densité f_X"""

    @abstractmethod
    def quantile(self, q: ArrayLike) -> ArrayLike:
        """Quantile x_q (inversion analytique)"""

    @abstractmethod
    def quantile_gradient(self, q: ArrayLike) -> np.ndarray:
        """Dérivées de x_q par rapport aux paramètres stockés"""

    @abstractmethod
    def to_array(self) -> np.ndarray:
        """Vecteur des paramètres estimés, dans l'ordre de param_names"""

    @abstractmethod
    def with_array(self, values: np.ndarray) -> "EvDistribution":
        """Copie du modèle avec un nouveau vecteur de paramètres"""

    @abstractmethod
    def support(self) -> Tuple[float, float]:
        """Bornes (inf, sup) du support de X"""

    @property
    def n_params(self) -> int:
        return len(self.param_names)

    @property
    def psi(self) -> float:
        return float(np.exp(self.logpsi))


# ---------------------------------------------------------------------------
# GEV
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GevParams(EvDistribution):
    """Paramètres GEV : localisation, log de l'échelle, forme"""

    mu: float
    logpsi: float
    xi: float

    kind = "gev"
    param_names = ("mu", "logpsi", "xi")

    def cdf(self, x):
        return gev_cdf(x, self)

    def pdf(self, x):
        return gev_pdf(x, self)

    def logpdf(self, x):
        return gev_logpdf(x, self)

    def quantile(self, q):
        return gev_quantile(q, self)

    def quantile_gradient(self, q):
        return gev_quantile_gradient(q, self)

    def loglik(self, sample):
        return gev_loglik(sample, self)

    def to_array(self) -> np.ndarray:
        return np.array([self.mu, self.logpsi, self.xi], dtype=float)

    def with_array(self, values) -> "GevParams":
        mu, logpsi, xi = (float(v) for v in values)
        return GevParams(mu=mu, logpsi=logpsi, xi=xi)

    def support(self) -> Tuple[float, float]:
        if _is_gumbel(self.xi):
            return (-np.inf, np.inf)
        bound = self.mu - self.psi / self.xi
        return (bound, np.inf) if self.xi > 0 else (-np.inf, bound)


def _gev_log_tail(x: np.ndarray, p: GevParams) -> np.ndarray:
    """log de [1+ξt]₊^(-1/ξ) (ou -t pour Gumbel) ; ±inf hors du support"""
    t = (x - p.mu) / p.psi
    if _is_gumbel(p.xi):
        return -t
    with np.errstate(divide="ignore", invalid="ignore"):
        s = 1.0 + p.xi * t
        log_tail = -np.log1p(p.xi * t) / p.xi
    outside = np.inf if p.xi > 0 else -np.inf
    return np.where(s > 0, log_tail, outside)


def gev_cdf(x: ArrayLike, p: GevParams) -> ArrayLike:
    """F(x) = exp(-[1+ξ(x-μ)/ψ]₊^(-1/ξ)), double exponentielle si ξ=0"""
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        tail = np.exp(_gev_log_tail(x, p))
    return _as_output(np.exp(-tail))


def gev_logpdf(x: ArrayLike, p: GevParams) -> ArrayLike:
    x = np.asarray(x, dtype=float)
    log_tail = _gev_log_tail(x, p)
    with np.errstate(over="ignore", invalid="ignore"):
        # log f = -log ψ + (1+ξ)·log_tail - exp(log_tail)
        lp = -p.logpsi + (1.0 + (0.0 if _is_gumbel(p.xi) else p.xi)) * log_tail - np.exp(log_tail)
    lp = np.where(np.isnan(lp) | ~np.isfinite(log_tail), -np.inf, lp)
    return _as_output(lp)


def gev_pdf(x: ArrayLike, p: GevParams) -> ArrayLike:
    """Densité GEV, nulle hors du support"""
    return _as_output(np.exp(gev_logpdf(x, p)))


def gev_quantile(q: ArrayLike, p: GevParams) -> ArrayLike:
    """Inversion analytique de gev_cdf"""
    log_y = np.log(-np.log(_check_probability(q)))
    if _is_gumbel(p.xi):
        return _as_output(p.mu - p.psi * log_y)
    return _as_output(p.mu + p.psi * np.expm1(-p.xi * log_y) / p.xi)


def gev_quantile_gradient(q: ArrayLike, p: GevParams) -> np.ndarray:
    """∂x_q/∂(μ, log ψ, ξ), forme (3,) ou (3, len(q))"""
    log_y = np.log(-np.log(_check_probability(q)))
    d_mu = np.ones_like(log_y)
    if _is_gumbel(p.xi):
        d_logpsi = -p.psi * log_y
        d_xi = 0.5 * p.psi * log_y ** 2
    else:
        d_logpsi = p.psi * np.expm1(-p.xi * log_y) / p.xi
        d_xi = p.psi * (-log_y * np.exp(-p.xi * log_y) / p.xi - np.expm1(-p.xi * log_y) / p.xi ** 2)
    return np.array([d_mu, d_logpsi, d_xi], dtype=float)


def gev_loglik(sample: ArrayLike, p: GevParams) -> float:
    """Σ log f(xᵢ) ; -inf si une observation sort du support"""
    sample = np.atleast_1d(np.asarray(sample, dtype=float))
    if sample.size == 0:
        raise DomainError("Échantillon vide pour la log-vraisemblance GEV")
    lp = np.atleast_1d(gev_logpdf(sample, p))
    if not np.all(np.isfinite(lp)):
        return -np.inf
    return float(np.sum(lp))


def gev_mean(p: GevParams) -> float:
    """Espérance analytique μ + ψ(Γ(1-ξ)-1)/ξ"""
    if p.xi >= 1.0:
        return np.inf
    if _is_gumbel(p.xi):
        return p.mu + p.psi * np.euler_gamma
    return p.mu + p.psi * (special.gamma(1.0 - p.xi) - 1.0) / p.xi


# ---------------------------------------------------------------------------
# Pareto généralisée et Pareto-Poisson
# ---------------------------------------------------------------------------

def gpd_loglik(excesses: ArrayLike, logpsi: float, xi: float) -> float:
    """Log-vraisemblance GPD des excès e = x - u ≥ 0"""
    e = np.atleast_1d(np.asarray(excesses, dtype=float))
    if e.size == 0:
        raise DomainError("Aucun excès pour la log-vraisemblance GPD")
    if np.any(e < 0):
        return -np.inf
    psi = np.exp(logpsi)
    n = e.size
    if _is_gumbel(xi):
        return float(-n * logpsi - np.sum(e) / psi)
    s = 1.0 + xi * e / psi
    if np.any(s <= 0):
        return -np.inf
    return float(-n * logpsi - (1.0 + 1.0 / xi) * np.sum(np.log1p(xi * e / psi)))


@dataclass(frozen=True)
class ParetoPoissonParams(EvDistribution):
    """Paramètres Pareto-Poisson : taux annuel, log de l'échelle GPD, forme, seuil fixe"""

    lam: float
    logpsi: float
    xi: float
    u: float

    kind = "pp"
    param_names = ("lambda", "logpsi", "xi")

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError(f"Le taux λ doit être > 0, reçu {self.lam}")
        if not np.isfinite(self.u):
            raise DomainError("Le seuil u doit être fini")

    def cdf(self, x):
        return pp_cdf(x, self)

    def pdf(self, x):
        return pp_pdf(x, self)

    def logpdf(self, x):
        return pp_logpdf(x, self)

    def quantile(self, q):
        return pp_quantile(q, self)

    def quantile_gradient(self, q):
        return pp_quantile_gradient(q, self)

    def loglik(self, exceedances, counts):
        return pp_loglik(exceedances, counts, self)

    @property
    def no_exceedance_probability(self) -> float:
        """exp(-λ) : masse des années sans dépassement, placée au seuil"""
        return float(np.exp(-self.lam))

    def to_array(self) -> np.ndarray:
        return np.array([self.lam, self.logpsi, self.xi], dtype=float)

    def with_array(self, values) -> "ParetoPoissonParams":
        lam, logpsi, xi = (float(v) for v in values)
        return replace(self, lam=lam, logpsi=logpsi, xi=xi)

    def support(self) -> Tuple[float, float]:
        if self.xi < 0 and not _is_gumbel(self.xi):
            return (self.u, self.u + self.psi / abs(self.xi))
        return (self.u, np.inf)


def _pp_log_survival(x: np.ndarray, p: ParetoPoissonParams) -> np.ndarray:
    """log de la survie GPD des excès, -inf au-delà de la borne supérieure"""
    e = np.maximum(x - p.u, 0.0)
    if _is_gumbel(p.xi):
        return -e / p.psi
    with np.errstate(divide="ignore", invalid="ignore"):
        s = 1.0 + p.xi * e / p.psi
        log_surv = -np.log1p(p.xi * e / p.psi) / p.xi
    return np.where(s > 0, log_surv, -np.inf)


def pp_cdf(x: ArrayLike, p: ParetoPoissonParams) -> ArrayLike:
    """F(x) = exp(-λ[1+ξ(x-u)/ψ]₊^(-1/ξ)) pour x ≥ u, 0 en dessous"""
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        values = np.exp(-p.lam * np.exp(_pp_log_survival(x, p)))
    return _as_output(np.where(x < p.u, 0.0, values))


def pp_logpdf(x: ArrayLike, p: ParetoPoissonParams) -> ArrayLike:
    x = np.asarray(x, dtype=float)
    log_surv = _pp_log_survival(x, p)
    slope = 1.0 if _is_gumbel(p.xi) else 1.0 + p.xi
    with np.errstate(over="ignore", invalid="ignore"):
        # log f = log λ - log ψ + (1+ξ)·log_surv - λ·exp(log_surv)
        lp = np.log(p.lam) - p.logpsi + slope * log_surv - p.lam * np.exp(log_surv)
    lp = np.where((x < p.u) | np.isnan(lp) | ~np.isfinite(log_surv), -np.inf, lp)
    return _as_output(lp)


def pp_pdf(x: ArrayLike, p: ParetoPoissonParams) -> ArrayLike:
    """Densité continue du maximum annuel au-dessus du seuil"""
    return _as_output(np.exp(pp_logpdf(x, p)))


def pp_quantile(q: ArrayLike, p: ParetoPoissonParams, return_flag: bool = False):
    """
    Inversion analytique de pp_cdf.

    Pour q ≤ exp(-λ) le quantile est censuré au seuil u ; avec return_flag=True la
    fonction renvoie (valeur, censuré).
    """
    q = _check_probability(q)
    log_w = np.log(-np.log(q) / p.lam)
    censored = log_w >= 0.0
    log_w = np.minimum(log_w, 0.0)
    if _is_gumbel(p.xi):
        values = p.u - p.psi * log_w
    else:
        values = p.u + p.psi * np.expm1(-p.xi * log_w) / p.xi
    values = np.where(censored, p.u, values)
    if return_flag:
        flag = bool(censored) if censored.ndim == 0 else censored
        return _as_output(values), flag
    return _as_output(values)


def pp_quantile_gradient(q: ArrayLike, p: ParetoPoissonParams) -> np.ndarray:
    """∂x_q/∂(λ, log ψ, ξ) ; nul pour les quantiles censurés"""
    q = _check_probability(q)
    log_w = np.log(-np.log(q) / p.lam)
    censored = log_w >= 0.0
    if _is_gumbel(p.xi):
        d_lam = np.full_like(log_w, p.psi / p.lam)
        d_logpsi = -p.psi * log_w
        d_xi = 0.5 * p.psi * log_w ** 2
    else:
        d_lam = p.psi * np.exp(-p.xi * log_w) / p.lam
        d_logpsi = p.psi * np.expm1(-p.xi * log_w) / p.xi
        d_xi = p.psi * (-log_w * np.exp(-p.xi * log_w) / p.xi - np.expm1(-p.xi * log_w) / p.xi ** 2)
    grad = np.array([d_lam, d_logpsi, d_xi], dtype=float)
    return np.where(censored, 0.0, grad)


def pp_loglik(exceedances: ArrayLike, counts: ArrayLike, p: ParetoPoissonParams) -> float:
    """Log-vraisemblance Poisson (comptes annuels) + GPD (excès au-dessus de u)"""
    exceedances = np.atleast_1d(np.asarray(exceedances, dtype=float))
    counts = np.atleast_1d(np.asarray(counts, dtype=float))
    if exceedances.size == 0:
        raise DomainError("Aucun dépassement pour la log-vraisemblance Pareto-Poisson")
    if counts.sum() != exceedances.size:
        raise DomainError(
            f"Les comptes annuels ({counts.sum():g}) ne correspondent pas aux dépassements ({exceedances.size})"
        )
    if np.any(exceedances <= p.u):
        return -np.inf
    poisson = np.sum(counts * np.log(p.lam) - p.lam - special.gammaln(counts + 1.0))
    return float(poisson + gpd_loglik(exceedances - p.u, p.logpsi, p.xi))


# ---------------------------------------------------------------------------
# Loi normale conditionnelle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormalCond:
    """Loi normale conditionnelle N(mean, sd²) de Y|X"""

    mean: ArrayLike
    sd: ArrayLike

    def __post_init__(self):
        if not np.all(np.asarray(self.sd) > 0):
            raise DomainError("L'écart-type conditionnel doit être > 0")
