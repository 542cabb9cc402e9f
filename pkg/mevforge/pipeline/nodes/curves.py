import logging

import pandas as pd

from ..state.analysis_state import AnalysisState
from mevforge.core.mixed import MixedModel, empirical_return_periods, return_period_curves

logger = logging.getLogger(__name__)


def build_curves(state: AnalysisState) -> AnalysisState:
    """Étape 4 : modèle mixte, trois courbes de période de retour et points empiriques."""
    config = state["config"]
    mixed = MixedModel.from_fits(state["ev_fit"], state["reg_fit"], config)
    state["mixed"] = mixed
    state["curves"] = return_period_curves(mixed, state["ev_fit"], state.get("gev_z_fit"),
                                           config.return_periods, config.alpha)

    tables = [empirical_return_periods(state["x_maxima"].maxima).assign(series="x")]
    z_maxima = state.get("z_maxima")
    if z_maxima is not None and len(z_maxima):
        tables.append(empirical_return_periods(z_maxima.maxima).assign(series="z"))
    state["empirical"] = pd.concat(tables, ignore_index=True)[["series", "T", "value"]]

    state.setdefault("processing_steps", []).append("build_curves")
    return state
