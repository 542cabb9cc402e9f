"""
Échantillons synthétiques : Cas 1 (GEV + régression linéaire), Cas 2 (Pareto-Poisson) et
tirage brut du modèle mixte.

Générateur : numpy Generator(Philox), générateur à compteur 64 bits reproductible d'une
plateforme à l'autre. Les uniformes sont tirés dans l'intervalle ouvert (0,1) et toutes les
variables sont obtenues par inversion (loi normale comprise).
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np

from .distributions import GevParams, ParetoPoissonParams, _is_gumbel, std_normal_quantile
from .exceptions import DomainError
from .hetreg import HetRegModel, PairedMaxima, RegressionFamily
from .mixed import MixedModel, conditional_sd_floor

logger = logging.getLogger(__name__)

_MANTISSA = 2 ** 53


class SimulationCase(str, Enum):
    GEV_CASE1 = "gev_case1"
    PARETO_POISSON_CASE2 = "pareto_poisson_case2"
    CUSTOM = "custom"


@dataclass(frozen=True)
class SimulationConfig:
    """Paramètres d'une simulation (valeurs par défaut : cas de référence)"""

    case: SimulationCase
    ev_params: Union[GevParams, ParetoPoissonParams]
    reg_params: Tuple[float, float, float, float]
    family: RegressionFamily = RegressionFamily.LINEAR
    years: int = 1000
    seed: int = 0
    start_year: int = 1001
    paired_years: Optional[int] = None
    poisson_counts: bool = False

    def __post_init__(self):
        object.__setattr__(self, "case", SimulationCase(self.case))
        object.__setattr__(self, "family", RegressionFamily(self.family))
        if self.years < 1:
            raise DomainError(f"years doit être ≥ 1, reçu {self.years}")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError("La graine doit être un entier 64 bits non signé")
        if self.paired_years is not None and not 0 <= self.paired_years <= self.years:
            raise DomainError("paired_years doit être dans [0, years]")
        if not 1 <= self.start_year <= 9999 - self.years + 1:
            raise DomainError("Les années simulées doivent rester dans [1, 9999]")

    @classmethod
    def case1(cls, years: int = 1000, seed: int = 0, **kwargs) -> "SimulationConfig":
        """GEV(10, exp(0.5), -0.15), β = (-0.5, 0.7, -0.3, 0.1) linéaire"""
        return cls(case=SimulationCase.GEV_CASE1, ev_params=GevParams(mu=10.0, logpsi=0.5, xi=-0.15),
                   reg_params=(-0.5, 0.7, -0.3, 0.1), years=years, seed=seed, **kwargs)

    @classmethod
    def case2(cls, years: int = 1000, seed: int = 0, **kwargs) -> "SimulationConfig":
        """Pareto-Poisson λ=25, ψ=exp(-0.13), ξ=-0.05 au seuil u=2.5, β = (0.16, 0.04, 0.3, 0.06)"""
        return cls(case=SimulationCase.PARETO_POISSON_CASE2,
                   ev_params=ParetoPoissonParams(lam=25.0, logpsi=-0.13, xi=-0.05, u=2.5),
                   reg_params=(0.16, 0.04, 0.3, 0.06), years=years, seed=seed, **kwargs)

    @property
    def regression(self) -> HetRegModel:
        return HetRegModel(family=self.family, beta=self.reg_params)

    @property
    def n_paired(self) -> int:
        return self.years if self.paired_years is None else self.paired_years


@dataclass
class SimulatedSample:
    """Maxima annuels simulés et, pour le Cas 2, les dépassements"""

    years: np.ndarray
    x_max: np.ndarray
    y: np.ndarray
    z_max: np.ndarray
    n_paired: int
    exceedances: np.ndarray = field(default_factory=lambda: np.empty(0))
    exceedance_years: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    threshold: Optional[float] = None

    def paired(self) -> PairedMaxima:
        """Les n_paired années les plus récentes, seules dotées d'un enregistrement instrumental"""
        k = self.years.size - self.n_paired
        return PairedMaxima(x=self.x_max[k:], y=self.y[k:], years=self.years[k:])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def open_uniform(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniformes dans (0,1) strictement, sur la grille (k + ½)/2⁵³"""
    return (rng.integers(0, _MANTISSA, size=n, dtype=np.int64) + 0.5) / _MANTISSA


def _conditional_draw(reg: HetRegModel, x: np.ndarray, rng: np.random.Generator,
                      sd_floor: Optional[float] = None) -> np.ndarray:
    """y = f_μ(x) + f_σ(x)·Φ⁻¹(U)"""
    normal = np.atleast_1d(std_normal_quantile(open_uniform(rng, x.size)))
    if sd_floor is None:
        sd = np.asarray(reg.sd(x), dtype=float)
        if np.any(sd <= 0):
            raise DomainError("f_σ ≤ 0 sur l'échantillon simulé")
    else:
        sd, _ = reg.sd_clamped(x, sd_floor)
    return np.asarray(reg.mean(x), dtype=float) + np.asarray(sd, dtype=float) * normal


def simulate_case1(config: SimulationConfig) -> SimulatedSample:
    """x_max par inversion de la GEV, y ~ N(f_μ(x), f_σ(x)²), z = x + y"""
    if not isinstance(config.ev_params, GevParams):
        raise DomainError("simulate_case1 exige des paramètres GEV")
    rng = make_rng(config.seed)
    x = np.atleast_1d(config.ev_params.quantile(open_uniform(rng, config.years)))
    y = _conditional_draw(config.regression, x, rng)
    years = np.arange(config.start_year, config.start_year + config.years)
    logger.info("✅ Cas 1 simulé: %d années (graine %d)", config.years, config.seed)
    return SimulatedSample(years=years, x_max=x, y=y, z_max=x + y, n_paired=config.n_paired)


def _annual_counts(config: SimulationConfig, rng: np.random.Generator) -> np.ndarray:
    lam = config.ev_params.lam
    if config.poisson_counts:
        return rng.poisson(lam, size=config.years)
    # Effectif fixe : round(λ·années) dépassements répartis au plus uniformément
    total = int(round(lam * config.years))
    counts = np.full(config.years, total // config.years)
    counts[: total % config.years] += 1
    return counts


def simulate_case2(config: SimulationConfig) -> SimulatedSample:
    """
    Dépassements GPD au-dessus de u répartis par année, maxima annuels, puis y et z.

    Par défaut le nombre de dépassements est fixe (λ par an) ; avec poisson_counts=True il
    suit une loi de Poisson et les années sans dépassement ont un maximum censuré à u.
    """
    p = config.ev_params
    if not isinstance(p, ParetoPoissonParams):
        raise DomainError("simulate_case2 exige des paramètres Pareto-Poisson")
    rng = make_rng(config.seed)
    counts = _annual_counts(config, rng)
    n = int(counts.sum())
    uniform = open_uniform(rng, n)
    if _is_gumbel(p.xi):
        excess = -p.psi * np.log1p(-uniform)
    else:
        excess = p.psi * np.expm1(-p.xi * np.log1p(-uniform)) / p.xi
    exceedances = p.u + excess

    years = np.arange(config.start_year, config.start_year + config.years)
    exceedance_years = np.repeat(years, counts)
    x_max = np.full(config.years, p.u)
    has_events = counts > 0
    ends = np.cumsum(counts)
    starts = ends - counts
    x_max[has_events] = np.maximum.reduceat(exceedances, starts[has_events]) if n else p.u

    y = _conditional_draw(config.regression, x_max, rng)
    logger.info("✅ Cas 2 simulé: %d dépassements sur %d années (graine %d)", n, config.years, config.seed)
    return SimulatedSample(years=years, x_max=x_max, y=y, z_max=x_max + y, n_paired=config.n_paired,
                           exceedances=exceedances, exceedance_years=exceedance_years, threshold=p.u)


def simulate(config: SimulationConfig) -> SimulatedSample:
    """Aiguille vers le cas correspondant au type de loi VE"""
    if isinstance(config.ev_params, ParetoPoissonParams):
        return simulate_case2(config)
    return simulate_case1(config)


def sample_mixed(m: MixedModel, n: int, seed: int) -> np.ndarray:
    """Tirage brut de Z = X + Y : X par inversion de la loi VE, puis Y|X normale"""
    rng = make_rng(seed)
    x = np.atleast_1d(m.ev.quantile(open_uniform(rng, n)))
    return x + _conditional_draw(m.reg, x, rng, sd_floor=conditional_sd_floor(m))
