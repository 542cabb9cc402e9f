"""
Modèle mixte de valeurs extrêmes : Z = X + Y avec X ~ loi VE et Y|X ~ N(f_μ(x), f_σ(x)²).

    F_Z(z) = ∫ f_X(x) Φ((z - x - f_μ(x)) / f_σ(x)) dx
    f_Z(z) = ∫ f_X(x) φ((z - x - f_μ(x)) / f_σ(x)) / f_σ(x) dx

Les intégrales sont calculées par quadrature adaptative de Gauss-Kronrod (15 points) sur
[F_X⁻¹(1e-12), F_X⁻¹(1-1e-12)] ∩ support. Pour le modèle Pareto-Poisson, la masse exp(-λ)
des années sans dépassement est placée au seuil u et ajoutée hors intégrale.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import integrate, linalg, optimize, special

from .distributions import ArrayLike, EvDistribution, ParetoPoissonParams, _as_output, _check_probability
from .exceptions import DomainError, NumericError
from .fitting import FitResult, QuantileBand, ev_quantile_band, t_multiplier
from .hetreg import HetRegModel, RegressionFamily
from ..utils.config import AnalysisConfig, get_config

logger = logging.getLogger(__name__)

TAIL_PROBABILITY = 1e-12
SD_FLOOR_FACTOR = 1e-6
BREAKPOINT_WIDTH = 8.0
_Z_CHUNK = 8
_SEARCH_POINTS = 65


@dataclass
class MixedModel:
    """Loi VE ajustée sur x et régression ajustée sur y, avec leurs covariances"""

    ev: EvDistribution
    reg: HetRegModel
    ev_covariance: np.ndarray
    reg_covariance: np.ndarray
    n_obs: int
    ev_free: np.ndarray = None
    reg_free: np.ndarray = None
    config: AnalysisConfig = field(default=None, repr=False)

    def __post_init__(self):
        self.ev_covariance = np.asarray(self.ev_covariance, dtype=float)
        self.reg_covariance = np.asarray(self.reg_covariance, dtype=float)
        if self.ev_free is None:
            self.ev_free = np.ones(self.ev.n_params, dtype=bool)
        if self.reg_free is None:
            self.reg_free = np.ones(4, dtype=bool)
        self.ev_free = np.asarray(self.ev_free, dtype=bool)
        self.reg_free = np.asarray(self.reg_free, dtype=bool)
        self.config = self.config or get_config()

    @classmethod
    def from_fits(cls, ev_fit: FitResult, reg_fit: FitResult,
                  config: Optional[AnalysisConfig] = None) -> "MixedModel":
        """Assemble le modèle mixte à partir des deux ajustements indépendants"""
        if not (ev_fit.covariance_valid and reg_fit.covariance_valid):
            raise NumericError("Covariance invalide dans l'un des ajustements")
        return cls(ev=ev_fit.model, reg=reg_fit.model, ev_covariance=ev_fit.covariance,
                   reg_covariance=reg_fit.covariance, n_obs=reg_fit.n_obs,
                   ev_free=ev_fit.free, reg_free=reg_fit.free, config=config)

    @property
    def n_ev_params(self) -> int:
        return self.ev.n_params

    @property
    def joint_covariance(self) -> np.ndarray:
        """Matrice bloc-diagonale : aucune covariance croisée entre θ_X et β"""
        return linalg.block_diag(self.ev_covariance, self.reg_covariance)

    @property
    def free(self) -> np.ndarray:
        return np.concatenate([self.ev_free, self.reg_free])

    @property
    def param_names(self) -> Tuple[str, ...]:
        return tuple(self.ev.param_names) + tuple(self.reg.param_names)

    def parameter_vector(self) -> np.ndarray:
        return np.concatenate([self.ev.to_array(), self.reg.to_array()])

    def with_parameters(self, values: np.ndarray) -> "MixedModel":
        k = self.n_ev_params
        return MixedModel(ev=self.ev.with_array(values[:k]), reg=self.reg.with_array(values[k:]),
                          ev_covariance=self.ev_covariance, reg_covariance=self.reg_covariance,
                          n_obs=self.n_obs, ev_free=self.ev_free, reg_free=self.reg_free,
                          config=self.config)

    def with_covariance_scale(self, factor: float) -> "MixedModel":
        return MixedModel(ev=self.ev, reg=self.reg, ev_covariance=factor * self.ev_covariance,
                          reg_covariance=factor * self.reg_covariance, n_obs=self.n_obs,
                          ev_free=self.ev_free, reg_free=self.reg_free, config=self.config)

    def cdf(self, z: ArrayLike) -> ArrayLike:
        return mixed_cdf(z, self)

    def pdf(self, z: ArrayLike) -> ArrayLike:
        return mixed_pdf(z, self)

    def quantile(self, q: float) -> float:
        return mixed_quantile(q, self)


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

def _domain(m: MixedModel) -> Tuple[float, float]:
    """[F_X⁻¹(1e-12), F_X⁻¹(1-1e-12)] ∩ support, et x > 0 pour la famille puissance"""
    support_lo, support_hi = m.ev.support()
    lo = max(float(m.ev.quantile(TAIL_PROBABILITY)), support_lo)
    hi = min(float(m.ev.quantile(1.0 - TAIL_PROBABILITY)), support_hi)
    if isinstance(m.ev, ParetoPoissonParams):
        lo = m.ev.u
    if m.reg.family is RegressionFamily.POWER:
        lo = max(lo, 0.0)
    if not hi > lo:
        raise NumericError(f"Domaine d'intégration vide: [{lo}, {hi}]")
    return lo, hi


def _sd_floor(lo: float, hi: float) -> float:
    return SD_FLOOR_FACTOR * max(hi - lo, abs(lo), abs(hi))


def conditional_sd_floor(m: MixedModel) -> float:
    """σ_min = 1e-6 × échelle des données, substitué aux f_σ ≤ 0"""
    return _sd_floor(*_domain(m))


def _breakpoints(m: MixedModel, z: np.ndarray, lo: float, hi: float, floor: float) -> List[float]:
    """Racines de x + f_μ(x) = z dans (lo, hi), élargies de ±8 f_σ"""
    grid = np.linspace(lo, hi, _SEARCH_POINTS)[1:-1]
    shift = grid + np.asarray(m.reg.mean(grid), dtype=float)
    points: List[float] = []
    for target in np.atleast_1d(z):
        if not np.isfinite(target):
            continue
        gap = shift - target
        for i in np.flatnonzero(np.sign(gap[:-1]) * np.sign(gap[1:]) < 0):
            root = optimize.brentq(lambda x: x + float(m.reg.mean(x)) - target, grid[i], grid[i + 1])
            sd, _ = m.reg.sd_clamped(root, floor)
            for candidate in (root - BREAKPOINT_WIDTH * sd, root, root + BREAKPOINT_WIDTH * sd):
                if lo < candidate < hi:
                    points.append(float(candidate))
    return sorted(set(points))


def _integrate_models(models: Sequence[MixedModel], z: np.ndarray, density: bool) -> np.ndarray:
    """
    F_Z (ou f_Z) de chaque modèle en chaque z, forme (len(models), len(z)).

    Une seule quadrature vectorielle par paquet de z ; les points de rupture viennent du
    premier modèle.
    """
    base = models[0]
    config = base.config
    domains = [_domain(m) for m in models]
    lo = min(d[0] for d in domains)
    hi = max(d[1] for d in domains)
    floor = _sd_floor(lo, hi)
    clamped = [False]

    out = np.empty((len(models), z.size))
    for start in range(0, z.size, _Z_CHUNK):
        chunk = z[start:start + _Z_CHUNK]

        def integrand(x: float) -> np.ndarray:
            rows = []
            for m in models:
                fx = float(m.ev.pdf(x))
                if fx == 0.0:
                    rows.append(np.zeros(chunk.size))
                    continue
                sd, hit = m.reg.sd_clamped(x, floor)
                clamped[0] = clamped[0] or hit
                arg = (chunk - x - float(m.reg.mean(x))) / sd
                if density:
                    rows.append(fx * np.exp(-0.5 * arg * arg) / (np.sqrt(2.0 * np.pi) * sd))
                else:
                    rows.append(fx * special.ndtr(arg))
            return np.concatenate(rows)

        points = _breakpoints(base, chunk, lo, hi, floor) or None
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", category=integrate.IntegrationWarning)
            values, error, info = integrate.quad_vec(
                integrand, lo, hi, quadrature="gk15", points=points, full_output=True,
                **config.get_quadrature_config(),
            )
        if not info.success:
            raise NumericError(
                f"Quadrature non convergée ({getattr(info, 'message', info.status)}) : "
                f"erreur atteinte {error:.3e} "
                f"pour une tolérance {config.quad_abs_tol:.1e}"
            )
        out[:, start:start + chunk.size] = np.asarray(values).reshape(len(models), chunk.size)

    for k, m in enumerate(models):
        if isinstance(m.ev, ParetoPoissonParams):
            # Masse exp(-λ) des années sans dépassement, au seuil u
            sd, hit = m.reg.sd_clamped(m.ev.u, floor)
            clamped[0] = clamped[0] or hit
            arg = (z - m.ev.u - float(m.reg.mean(m.ev.u))) / sd
            atom = special.ndtr(arg) if not density else np.exp(-0.5 * arg * arg) / (np.sqrt(2.0 * np.pi) * sd)
            out[k] += m.ev.no_exceedance_probability * atom

    if clamped[0]:
        message = f"f_σ ≤ 0 dans le domaine d'intégration : écart-type ramené à {floor:.3e}"
        logger.warning("⚠️ %s", message)
        warnings.warn(message, RuntimeWarning, stacklevel=3)
    return out


def mixed_cdf(z: ArrayLike, m: MixedModel) -> ArrayLike:
    """F_Z(z), vectorisée en z"""
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    values = np.clip(_integrate_models([m], z_arr, density=False)[0], 0.0, 1.0)
    return _as_output(values.reshape(np.shape(z)))


def mixed_pdf(z: ArrayLike, m: MixedModel) -> ArrayLike:
    """f_Z(z), vectorisée en z"""
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    values = np.maximum(_integrate_models([m], z_arr, density=True)[0], 0.0)
    return _as_output(values.reshape(np.shape(z)))


# ---------------------------------------------------------------------------
# Quantiles
# ---------------------------------------------------------------------------

def _bracket(q: float, m: MixedModel, cdf: Callable[[float], float]) -> Tuple[float, float]:
    """Encadrement autour du quantile VE décalé de la moyenne conditionnelle, élargi géométriquement"""
    config = m.config
    lo_x, hi_x = _domain(m)
    floor = _sd_floor(lo_x, hi_x)
    x_q = float(m.ev.quantile(q))
    grid = np.linspace(lo_x, hi_x, _SEARCH_POINTS)[1:-1]
    sd_bar, _ = m.reg.sd_clamped(np.append(grid, x_q), floor)
    sd_bar = float(np.max(sd_bar))
    center = x_q + float(m.reg.mean(x_q))
    width = 10.0 * sd_bar
    lo, hi = center - width, center + width
    step = width
    for _ in range(config.max_bracket_doublings):
        f_lo, f_hi = cdf(lo) - q, cdf(hi) - q
        if f_lo <= 0.0 <= f_hi:
            return lo, hi
        if f_lo > 0.0:
            lo -= step
        if f_hi < 0.0:
            hi += step
        step *= 2.0
    raise NumericError(f"Encadrement du quantile q={q} impossible après {config.max_bracket_doublings} doublements")


def mixed_quantile(q: float, m: MixedModel) -> float:
    """Résout F_Z(z) = q par la méthode de Brent ; résidu |F_Z(ẑ) - q| ≤ quantile_tol"""
    q = float(_check_probability(q))
    config = m.config

    def cdf(z: float) -> float:
        return float(mixed_cdf(z, m))

    lo, hi = _bracket(q, m, cdf)
    root = optimize.brentq(lambda z: cdf(z) - q, lo, hi,
                           xtol=1e-12 * max(1.0, abs(lo), abs(hi)), rtol=4 * np.finfo(float).eps,
                           maxiter=200)
    residual = abs(cdf(root) - q)
    if residual > config.quantile_tol:
        raise NumericError(f"Résidu du quantile trop grand: |F_Z(ẑ) - q| = {residual:.3e}")
    return float(root)


def _perturbation_steps(gamma: np.ndarray, eps: float) -> np.ndarray:
    """ε|γ| (la différence centrée couvre 2εγ) ; pas absolu ε pour γ = 0"""
    return np.where(gamma != 0.0, eps * np.abs(gamma), eps)


def quantile_gradient(q: float, m: MixedModel, method: str = "implicit",
                      z_q: Optional[float] = None) -> np.ndarray:
    """
    ∂z_q/∂γ pour tous les paramètres (θ_X ; β), nul pour les paramètres figés.

    implicit : différences centrées de F_Z au quantile fixé, toutes perturbations dans une
               même quadrature vectorielle, puis ∂z_q/∂γ = -(∂F_Z/∂γ) / f_Z(z_q).
    resolve  : nouvelle résolution du quantile pour γ(1 ± ε).

    Les deux méthodes évaluent la même différence centrée du quantile : implicit en est le
    développement au premier ordre autour de z_q, sans nouvelle recherche de racine.
    """
    eps = m.config.gradient_eps
    gamma = m.parameter_vector()
    steps = _perturbation_steps(gamma, eps)
    indices = np.flatnonzero(m.free)
    grad = np.zeros(gamma.size)
    z_q = mixed_quantile(q, m) if z_q is None else z_q

    def shifted(j: int, sign: float) -> MixedModel:
        values = gamma.copy()
        values[j] += sign * steps[j]
        return m.with_parameters(values)

    if method == "implicit":
        models = []
        for j in indices:
            models.extend([shifted(j, 1.0), shifted(j, -1.0)])
        cdf_values = _integrate_models(models, np.array([z_q]), density=False)[:, 0]
        density = float(mixed_pdf(z_q, m))
        if density <= 0.0:
            raise NumericError(f"Densité nulle au quantile z_q={z_q}")
        for k, j in enumerate(indices):
            d_cdf = (cdf_values[2 * k] - cdf_values[2 * k + 1]) / (2.0 * steps[j])
            grad[j] = -d_cdf / density
    elif method == "resolve":
        for j in indices:
            grad[j] = (mixed_quantile(q, shifted(j, 1.0)) - mixed_quantile(q, shifted(j, -1.0))) / (2.0 * steps[j])
    else:
        raise DomainError(f"Méthode de gradient inconnue: {method}")
    return grad


def quantile_bands(q: float, m: MixedModel, alpha: float = 0.05,
                   n_obs: Optional[int] = None, method: str = "implicit") -> QuantileBand:
    """
    Bande delta de z_q : var = ∇ᵀ Σ ∇ avec Σ bloc-diagonale, multiplicateur de Student à
    n_y - n_β - 1 ddl (n_y : taille de l'échantillon apparié).
    """
    z_q = mixed_quantile(q, m)
    grad = quantile_gradient(q, m, method=method, z_q=z_q)
    variance = float(grad @ m.joint_covariance @ grad)
    if variance < -1e-12 * max(1.0, z_q ** 2):
        raise NumericError(f"Variance delta négative: {variance}")
    se = float(np.sqrt(max(variance, 0.0)))
    n_obs = m.n_obs if n_obs is None else n_obs
    half = t_multiplier(alpha, n_obs - int(np.sum(m.reg_free)) - 1) * se
    return QuantileBand(q=float(q), value=z_q, lo=z_q - half, hi=z_q + half, se=se)


# ---------------------------------------------------------------------------
# Courbes de période de retour
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CurvePoint:
    """Une période de retour et son quantile encadré"""

    T: float
    q: float
    z: float
    lo: float
    hi: float


@dataclass
class ReturnPeriodCurve:
    """Courbe quantile / période de retour d'un modèle"""

    model: str
    entries: List[CurvePoint] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "T": [e.T for e in self.entries],
            "q": [e.q for e in self.entries],
            "model": self.model,
            "quantile": [e.z for e in self.entries],
            "lo": [e.lo for e in self.entries],
            "hi": [e.hi for e in self.entries],
        }, columns=["T", "q", "model", "quantile", "lo", "hi"])


def _probabilities(T_list: Sequence[float]) -> List[Tuple[float, float]]:
    periods = sorted(float(T) for T in T_list)
    if any(T <= 1.0 for T in periods):
        raise DomainError("Les périodes de retour doivent être > 1")
    return [(T, 1.0 - 1.0 / T) for T in periods]


def return_period_curve(m: MixedModel, T_list: Sequence[float], alpha: float = 0.05,
                        n_obs: Optional[int] = None, label: str = "MODEL(z)") -> ReturnPeriodCurve:
    """q = 1 - 1/T, quantile mixte et bande delta pour chaque T"""
    curve = ReturnPeriodCurve(model=label)
    for T, q in _probabilities(T_list):
        band = quantile_bands(q, m, alpha, n_obs)
        curve.entries.append(CurvePoint(T=T, q=q, z=band.value, lo=band.lo, hi=band.hi))
        logger.debug("🔧 %s T=%g: z=%.4f [%.4f, %.4f]", label, T, band.value, band.lo, band.hi)
    return curve


def ev_curve(fit: FitResult, T_list: Sequence[float], alpha: float = 0.05,
             label: Optional[str] = None) -> ReturnPeriodCurve:
    """Courbe d'un ajustement VE seul (bande delta avec gradient analytique)"""
    curve = ReturnPeriodCurve(model=label or f"{fit.model.kind.upper()}(x)")
    for T, q in _probabilities(T_list):
        band = ev_quantile_band(fit, q, alpha)
        curve.entries.append(CurvePoint(T=T, q=q, z=band.value, lo=band.lo, hi=band.hi))
    return curve


def return_period_curves(m: MixedModel, ev_fit: FitResult, gev_z_fit: Optional[FitResult],
                         T_list: Sequence[float], alpha: float = 0.05) -> List[ReturnPeriodCurve]:
    """Les trois courbes de comparaison : VE sur x, modèle mixte, GEV directe sur z"""
    curves = [
        ev_curve(ev_fit, T_list, alpha, label=f"{ev_fit.model.kind.upper()}(x)"),
        return_period_curve(m, T_list, alpha),
    ]
    if gev_z_fit is not None:
        curves.append(ev_curve(gev_z_fit, T_list, alpha, label="GEV(z)"))
    logger.info("✅ %d courbes de période de retour calculées (%d périodes)", len(curves), len(T_list))
    return curves


def empirical_return_periods(maxima: Sequence[float]) -> pd.DataFrame:
    """Positions de Weibull i/(n+1) et T = 1/(1-p) des maxima triés"""
    values = np.sort(np.asarray(maxima, dtype=float))
    n = values.size
    p = np.arange(1, n + 1) / (n + 1.0)
    return pd.DataFrame({"T": 1.0 / (1.0 - p), "value": values})
