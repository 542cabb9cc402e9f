"""
Batterie de diagnostics : transformation PIT, test de Kolmogorov-Smirnov contre la loi
normale standard, ACF/PACF, test de Ljung-Box et tables PP/QQ.
"""

import logging
import warnings
from typing import Callable, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import special
from statsmodels.stats.diagnostic import acorr_ljungbox
from statsmodels.tsa.stattools import acovf, levinson_durbin

from .distributions import EvDistribution, std_normal_cdf, std_normal_quantile
from .exceptions import DomainError
from .hetreg import HetRegModel, PairedMaxima, studentized_residuals
from .reports import AcfReport, DiagnosticsReport, TestReport
from ..utils.config import AnalysisConfig, get_config

logger = logging.getLogger(__name__)

PIT_CLAMP = 1e-12
ESTIMATED_PARAMETERS_NOTE = (
    "Paramètres estimés sur le même échantillon : les p-valeurs KS ne sont pas corrigées"
)


def _as_sample(sample: Sequence[float]) -> np.ndarray:
    x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0:
        raise DomainError("Échantillon vide")
    if not np.all(np.isfinite(x)):
        raise DomainError("Valeurs non finies dans l'échantillon")
    return x


def pit_transform(sample: Sequence[float], cdf_fn: Callable) -> np.ndarray:
    """Φ⁻¹(F(x)), avec F(x) ramené dans [1e-12, 1-1e-12]"""
    x = _as_sample(sample)
    u = np.clip(np.asarray(cdf_fn(x), dtype=float), PIT_CLAMP, 1.0 - PIT_CLAMP)
    return np.atleast_1d(std_normal_quantile(u))


def ks_test_std_normal(sample: Sequence[float], alpha: float = 0.05) -> TestReport:
    """
    Test de Kolmogorov-Smirnov à un échantillon contre N(0,1).

    p-valeur : série de Kolmogorov asymptotique évaluée en (√n + 0.12 + 0.11/√n)·D.
    """
    x = np.sort(_as_sample(sample))
    n = x.size
    if n < 5:
        message = f"Test KS sur {n} < 5 observations : p-valeur peu fiable"
        logger.warning("⚠️ %s", message)
        warnings.warn(message, RuntimeWarning, stacklevel=2)
    cdf = np.atleast_1d(std_normal_cdf(x))
    ranks = np.arange(1, n + 1)
    d_plus = np.max(ranks / n - cdf)
    d_minus = np.max(cdf - (ranks - 1) / n)
    statistic = float(max(d_plus, d_minus))
    root_n = np.sqrt(n)
    p_value = float(special.kolmogorov((root_n + 0.12 + 0.11 / root_n) * statistic))
    return TestReport.from_p_value("ks_std_normal", statistic, p_value, alpha)


def acf(sample: Sequence[float], max_lag: int, alpha: float = 0.05) -> AcfReport:
    """
    ρ̂_k = Σ(x_t - x̄)(x_{t+k} - x̄) / Σ(x_t - x̄)², PACF par la récursion de Durbin-Levinson,
    borne z_{1-α/2}/√n.
    """
    x = _as_sample(sample)
    n = x.size
    if not 1 <= max_lag < n:
        raise DomainError(f"max_lag doit être dans [1, n-1], reçu {max_lag} pour n={n}")
    autocov = acovf(x, adjusted=False, demean=True, fft=False, nlag=max_lag)
    if autocov[0] <= 0.0:
        raise DomainError("Échantillon constant : autocorrélations indéfinies")
    rho = np.clip(autocov / autocov[0], -1.0, 1.0)
    rho[0] = 1.0
    _, _, pacf, _, _ = levinson_durbin(autocov, nlags=max_lag, isacov=True)
    pacf = np.clip(pacf, -1.0, 1.0)
    bound = float(special.ndtri(1.0 - alpha / 2.0) / np.sqrt(n))
    return AcfReport(lags=list(range(max_lag + 1)), acf=rho.tolist(), pacf=pacf.tolist(), conf_bound=bound)


def ljung_box(sample: Sequence[float], lags: Sequence[int], alpha: float = 0.05) -> List[TestReport]:
    """Q(h) = n(n+2) Σ_{k≤h} ρ̂_k²/(n-k), p-valeur χ²(h), un rapport par retard demandé"""
    x = _as_sample(sample)
    lags = sorted(int(h) for h in lags)
    if not lags or lags[0] < 1:
        raise DomainError("Les retards de Ljung-Box doivent être ≥ 1")
    if lags[-1] >= x.size:
        raise DomainError(f"Retard {lags[-1]} ≥ n={x.size}")
    if np.ptp(x) == 0.0:
        raise DomainError("Échantillon constant : test de Ljung-Box indéfini")
    table = acorr_ljungbox(x, lags=lags)
    return [
        TestReport.from_p_value("ljung_box", float(table.loc[h, "lb_stat"]),
                                float(table.loc[h, "lb_pvalue"]), alpha, lag=h, dof=h)
        for h in lags
    ]


def pp_qq_data(sample: Sequence[float], cdf_fn: Callable, quantile_fn: Callable) -> pd.DataFrame:
    """
    Table PP (F̂(x_(i)), p_i) et QQ (x_(i), F̂⁻¹(p_i)) avec les positions de Weibull i/(n+1).
    """
    x = np.sort(_as_sample(sample))
    n = x.size
    p = np.arange(1, n + 1) / (n + 1.0)
    return pd.DataFrame({
        "p": p,
        "x": x,
        "model_cdf": np.asarray(cdf_fn(x), dtype=float).reshape(n),
        "model_quantile": np.asarray(quantile_fn(p), dtype=float).reshape(n),
    })


def _battery(subject: str, transformed: np.ndarray, table: pd.DataFrame, alpha: float,
             config: AnalysisConfig, notes: List[str]) -> DiagnosticsReport:
    n = transformed.size
    max_lag = min(config.acf_max_lag, n - 1)
    lb_lags = [h for h in config.ljung_box_lags if h < n]
    if len(lb_lags) < len(config.ljung_box_lags):
        notes.append(f"Retards de Ljung-Box ≥ n={n} ignorés")
    report = DiagnosticsReport(
        subject=subject,
        n=n,
        ks=ks_test_std_normal(transformed, alpha),
        ljung_box=ljung_box(transformed, lb_lags, alpha) if lb_lags else [],
        acf=acf(transformed, max_lag, alpha),
        pp_qq={column: table[column].tolist() for column in table.columns},
        notes=notes,
    )
    verdict = "❌ rejet" if report.ks.reject else "✅ accepté"
    logger.info("%s KS (%s): D=%.4f, p=%.4f", verdict, subject, report.ks.statistic, report.ks.p_value)
    return report


def diagnose_ev_fit(maxima: Sequence[float], model: EvDistribution, alpha: float = 0.05,
                    config: Optional[AnalysisConfig] = None, subject: str = "ev_fit") -> DiagnosticsReport:
    """PIT + KS, ACF/PACF et Ljung-Box de l'échantillon transformé, table PP/QQ"""
    config = config or get_config()
    transformed = pit_transform(maxima, model.cdf)
    table = pp_qq_data(maxima, model.cdf, model.quantile)
    table["pit"] = np.sort(transformed)
    return _battery(subject, transformed, table, alpha, config, [ESTIMATED_PARAMETERS_NOTE])


def diagnose_regression(data: PairedMaxima, model: HetRegModel, alpha: float = 0.05,
                        config: Optional[AnalysisConfig] = None) -> DiagnosticsReport:
    """KS sur les résidus studentisés, ACF/PACF, Ljung-Box, droite de Henry"""
    config = config or get_config()
    residuals = studentized_residuals(model, data)
    table = pp_qq_data(residuals, std_normal_cdf, std_normal_quantile)
    notes = [
        ESTIMATED_PARAMETERS_NOTE,
        "Ωᵢᵢ approché par f_σ(xᵢ)² (inflation d'estimation ignorée)",
    ]
    return _battery("regression", residuals, table, alpha, config, notes)
