import logging
from functools import lru_cache
from pathlib import Path
from typing import Optional, Union

from langgraph.graph import END, StateGraph

from mevforge.pipeline.conditions.model_router import route_by_ev_model
from mevforge.pipeline.nodes.curves import build_curves
from mevforge.pipeline.nodes.diagnostics import run_diagnostics
from mevforge.pipeline.nodes.ev_fitting import fit_gev_x, fit_gev_z, fit_pareto_poisson_x
from mevforge.pipeline.nodes.loading import load_series
from mevforge.pipeline.nodes.outputs import write_outputs
from mevforge.pipeline.nodes.regression import fit_regression
from mevforge.pipeline.state.analysis_state import AnalysisState
from mevforge.utils.config import AnalysisConfig, get_config

logger = logging.getLogger(__name__)


def create_analysis_graph():
    """
    Crée le graphe de l'analyse complète.

    Returns:
        Graphe compilé : chargement → VE sur x (GEV ou Pareto-Poisson) → régression →
        GEV sur z → courbes → diagnostics → écriture
    """

    # === CRÉATION DU GRAPHE ===
    graph = StateGraph(AnalysisState)

    # === AJOUT DES NŒUDS ===
    graph.add_node("load_series", load_series)
    graph.add_node("fit_gev_x", fit_gev_x)
    graph.add_node("fit_pareto_poisson_x", fit_pareto_poisson_x)
    graph.add_node("fit_regression", fit_regression)
    graph.add_node("fit_gev_z", fit_gev_z)
    graph.add_node("build_curves", build_curves)
    graph.add_node("run_diagnostics", run_diagnostics)
    graph.add_node("write_outputs", write_outputs)

    # === DÉFINITION DU POINT D'ENTRÉE ===
    graph.set_entry_point("load_series")

    # === DÉFINITION DES FLUX ===
    graph.add_conditional_edges(
        "load_series",
        route_by_ev_model,
        {
            "fit_gev_x": "fit_gev_x",
            "fit_pareto_poisson_x": "fit_pareto_poisson_x",
        }
    )
    graph.add_edge("fit_gev_x", "fit_regression")
    graph.add_edge("fit_pareto_poisson_x", "fit_regression")
    graph.add_edge("fit_regression", "fit_gev_z")
    graph.add_edge("fit_gev_z", "build_curves")
    graph.add_edge("build_curves", "run_diagnostics")
    graph.add_edge("run_diagnostics", "write_outputs")
    graph.add_edge("write_outputs", END)

    compiled = graph.compile()
    logger.debug("✅ Graphe d'analyse compilé")
    return compiled


@lru_cache(maxsize=1)
def get_analysis_graph():
    """Graphe compilé une seule fois par processus"""
    return create_analysis_graph()


def run_full_analysis(reanalysis_path: Union[str, Path], instrumental_path: Union[str, Path],
                      config: Optional[AnalysisConfig] = None) -> AnalysisState:
    """Exécute les étapes 1 à 4 et écrit les résultats dans config.out_dir."""
    config = config or get_config()
    initial: AnalysisState = {
        "reanalysis_path": str(reanalysis_path),
        "instrumental_path": str(instrumental_path),
        "config": config,
        "processing_steps": [],
        "warnings": [],
    }
    logger.info("🔧 Analyse complète (%s, famille %s)", config.ev_model, config.family)
    return get_analysis_graph().invoke(initial)
