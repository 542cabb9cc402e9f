import logging

from ..state.analysis_state import AnalysisState
from mevforge.core.diagnostics import diagnose_ev_fit, diagnose_regression

logger = logging.getLogger(__name__)


def run_diagnostics(state: AnalysisState) -> AnalysisState:
    """Diagnostics de l'ajustement VE sur x et de la régression (résidus studentisés)."""
    config = state["config"]
    reports = {
        "ev_fit": diagnose_ev_fit(state["x_maxima"].maxima, state["ev_fit"].model, config.alpha, config),
    }
    if state.get("reg_fit") is not None and state.get("paired") is not None:
        reports["regression"] = diagnose_regression(state["paired"], state["reg_fit"].model, config.alpha, config)
    state["diagnostics"] = reports
    state.setdefault("processing_steps", []).append("run_diagnostics")
    return state
