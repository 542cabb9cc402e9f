import logging

from ..state.analysis_state import AnalysisState
from mevforge.core.exceptions import FitError
from mevforge.core.fitting import fit_gev, fit_pareto_poisson, select_gumbel, select_shape

logger = logging.getLogger(__name__)


def _note_convergence(state: AnalysisState, label: str, fit) -> None:
    if not fit.converged:
        state.setdefault("warnings", []).append(f"{label}: {fit.message}")
        logger.warning("⚠️ %s non convergé: %s", label, fit.message)


def fit_gev_x(state: AnalysisState) -> AnalysisState:
    """Étape 1 (GEV) : ajustement sur les maxima de réanalyse, avec sélection Gumbel optionnelle."""
    config = state["config"]
    maxima = state["x_maxima"].maxima
    fit = fit_gev(maxima, config)
    state["ev_selection"] = None
    if config.gumbel_selection:
        selection = select_gumbel(maxima, fit, config.alpha, config)
        state["ev_selection"] = selection
        fit = selection.chosen
    state["ev_fit"] = fit
    _note_convergence(state, "GEV(x)", fit)
    state.setdefault("processing_steps", []).append("fit_gev_x")
    return state


def fit_pareto_poisson_x(state: AnalysisState) -> AnalysisState:
    """Étape 1 (Pareto-Poisson) : λ̂ explicite, GPD sur les excès, sélection ξ = 0 optionnelle."""
    config = state["config"]
    peaks = state["exceedances"]
    if len(peaks) == 0:
        raise FitError(f"Aucun pic au-dessus du seuil u={config.threshold}")
    fit = fit_pareto_poisson(peaks, state["n_years"], config.threshold, config=config)
    state["ev_selection"] = None
    if config.gumbel_selection:
        restricted = fit_pareto_poisson(peaks, state["n_years"], config.threshold, config=config, fix_shape=True)
        selection = select_shape(fit, restricted, config.alpha)
        state["ev_selection"] = selection
        fit = selection.chosen
    state["ev_fit"] = fit
    _note_convergence(state, "PP(x)", fit)
    state.setdefault("processing_steps", []).append("fit_pareto_poisson_x")
    return state


def fit_gev_z(state: AnalysisState) -> AnalysisState:
    """Étape 3 : GEV directe sur les maxima instrumentaux, pour comparaison."""
    config = state["config"]
    z_maxima = state.get("z_maxima")
    state["gev_z_fit"] = None
    state["gev_z_selection"] = None
    if z_maxima is None or len(z_maxima) < config.min_ev_obs:
        state.setdefault("warnings", []).append("GEV(z) non ajustée : série instrumentale trop courte")
        logger.warning("⚠️ GEV(z) ignorée : série instrumentale absente ou trop courte")
    else:
        fit = fit_gev(z_maxima.maxima, config)
        if config.gumbel_selection:
            selection = select_gumbel(z_maxima.maxima, fit, config.alpha, config)
            state["gev_z_selection"] = selection
            fit = selection.chosen
        state["gev_z_fit"] = fit
        _note_convergence(state, "GEV(z)", fit)
    state.setdefault("processing_steps", []).append("fit_gev_z")
    return state
