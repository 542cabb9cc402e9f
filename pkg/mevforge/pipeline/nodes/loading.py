import logging

import numpy as np

from ..state.analysis_state import AnalysisState
from mevforge.core.exceptions import FitError
from mevforge.io.services.series_service import SeriesService

logger = logging.getLogger(__name__)


def load_series(state: AnalysisState) -> AnalysisState:
    """
    Étape 0 : lecture des séries, maxima annuels, appariement des années et, pour le
    modèle Pareto-Poisson, extraction des pics au-dessus du seuil.
    """
    config = state["config"]
    reanalysis = SeriesService.ingest(state["reanalysis_path"])
    x_maxima = SeriesService.annual_maxima(reanalysis, config.coverage_floor, config.sampling_step_hours)
    if len(x_maxima) == 0:
        raise FitError("Aucune année de réanalyse ne satisfait le seuil de couverture")
    state["reanalysis"] = reanalysis
    state["x_maxima"] = x_maxima
    state["n_years"] = len(x_maxima)

    instrumental_path = state.get("instrumental_path")
    if instrumental_path:
        instrumental = SeriesService.ingest(instrumental_path)
        z_maxima = SeriesService.annual_maxima(instrumental, config.coverage_floor, config.sampling_step_hours)
        state["instrumental"] = instrumental
        state["z_maxima"] = z_maxima
        state["paired"] = SeriesService.pair_differences(x_maxima, z_maxima)
        if state["paired"].unpaired_years:
            state.setdefault("warnings", []).append(
                f"{len(state['paired'].unpaired_years)} années non appariées"
            )

    if config.ev_model == "pp":
        peaks, _ = SeriesService.peaks_over_threshold(
            reanalysis, config.threshold, config.decluster_hours, years=x_maxima.years
        )
        state["exceedances"] = peaks
    else:
        state["exceedances"] = np.empty(0)

    state.setdefault("processing_steps", []).append("load_series")
    logger.info("✅ Séries chargées: %d années de réanalyse", state["n_years"])
    return state
