"""Routeurs conditionnels du graphe d'analyse."""

from ..state.analysis_state import AnalysisState


def route_by_ev_model(state: AnalysisState) -> str:
    """
    Route vers l'ajustement VE demandé par la configuration.

    Returns:
        Nom du prochain nœud à exécuter
    """
    if state["config"].ev_model == "pp":
        return "fit_pareto_poisson_x"
    return "fit_gev_x"
