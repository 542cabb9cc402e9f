import logging

import numpy as np

from ..state.analysis_state import AnalysisState
from mevforge.core.exceptions import FitError
from mevforge.core.hetreg import fit_hetreg, homoscedasticity_test, regression_bands

logger = logging.getLogger(__name__)

BAND_GRID_POINTS = 50


def fit_regression(state: AnalysisState) -> AnalysisState:
    """Étape 2 : régression hétéroscédastique des différences, test d'homoscédasticité et bandes."""
    config = state["config"]
    paired = state.get("paired")
    if paired is None:
        raise FitError("Régression impossible : aucune série instrumentale fournie")

    fit = fit_hetreg(paired, config.family, config)
    state["reg_fit"] = fit
    if not fit.converged:
        state.setdefault("warnings", []).append(f"Régression: {fit.message}")

    state["homoscedasticity"] = homoscedasticity_test(paired, config.family, config.alpha, fit, config)

    if fit.covariance_valid:
        grid = np.linspace(paired.x.min(), paired.x.max(), BAND_GRID_POINTS)
        state["regression_bands"] = regression_bands(fit.model, fit, grid, config.alpha)
    else:
        state["regression_bands"] = None

    state.setdefault("processing_steps", []).append("fit_regression")
    return state
