"""État typé du graphe d'analyse LangGraph."""

from typing import Any, Dict, List, Optional, TypedDict

import numpy as np

from mevforge.core.fitting import FitResult, ShapeSelection
from mevforge.core.hetreg import PairedMaxima
from mevforge.core.mixed import MixedModel, ReturnPeriodCurve
from mevforge.core.reports import DiagnosticsReport, TestReport
from mevforge.io.models.series import AnnualMaximaSeries, TimeSeriesFile
from mevforge.utils.config import AnalysisConfig


class AnalysisState(TypedDict, total=False):
    """État d'une analyse : étapes 1 à 4 (VE sur x, régression, GEV sur z, courbes et diagnostics)."""

    # === ENTRÉES ===
    reanalysis_path: str
    instrumental_path: Optional[str]
    config: AnalysisConfig

    # === SÉRIES ===
    reanalysis: TimeSeriesFile
    instrumental: Optional[TimeSeriesFile]
    x_maxima: AnnualMaximaSeries
    z_maxima: Optional[AnnualMaximaSeries]
    paired: Optional[PairedMaxima]
    exceedances: np.ndarray
    n_years: int

    # === AJUSTEMENTS ===
    ev_fit: FitResult
    ev_selection: Optional[ShapeSelection]
    reg_fit: FitResult
    homoscedasticity: Optional[TestReport]
    regression_bands: Any
    gev_z_fit: Optional[FitResult]
    gev_z_selection: Optional[ShapeSelection]

    # === RÉSULTATS ===
    mixed: MixedModel
    curves: List[ReturnPeriodCurve]
    empirical: Any
    diagnostics: Dict[str, DiagnosticsReport]
    written_files: List[str]

    # === MÉTADONNÉES ===
    processing_steps: List[str]
    warnings: List[str]
