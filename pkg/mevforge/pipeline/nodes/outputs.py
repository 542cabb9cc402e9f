import logging
from pathlib import Path
from typing import Any, Dict, Optional

import pandas as pd

from ..state.analysis_state import AnalysisState
from mevforge.core.fitting import ShapeSelection
from mevforge.io.services.report_service import SCHEMA_VERSION, ReportService

logger = logging.getLogger(__name__)


def _selection_summary(selection: Optional[ShapeSelection], alpha: float) -> Optional[Dict[str, Any]]:
    if selection is None:
        return None
    return {
        "statistic": selection.statistic,
        "p_value": selection.p_value,
        "shape_fixed_at_zero": selection.restricted_chosen,
        "full": ReportService.fit_summary(selection.full, alpha),
        "restricted": ReportService.fit_summary(selection.restricted, alpha),
    }


def build_report(state: AnalysisState) -> Dict[str, Any]:
    """Rapport JSON : schema_version, ev_fit, reg_fit, gev_z_fit, diagnostics, curves_meta."""
    config = state["config"]
    alpha = config.alpha

    ev_fit = None
    if state.get("ev_fit") is not None:
        ev_fit = ReportService.fit_summary(state["ev_fit"], alpha)
        ev_fit["shape_selection"] = _selection_summary(state.get("ev_selection"), alpha)
        ev_fit["n_years"] = state.get("n_years")
        ev_fit["dropped_years"] = state["x_maxima"].dropped_years
        if config.ev_model == "pp":
            ev_fit["threshold"] = config.threshold
            ev_fit["n_exceedances"] = len(state["exceedances"])

    reg_fit = None
    if state.get("reg_fit") is not None:
        reg_fit = ReportService.fit_summary(state["reg_fit"], alpha)
        reg_fit["family"] = config.family
        reg_fit["unpaired_years"] = list(state["paired"].unpaired_years)
        homoscedasticity = state.get("homoscedasticity")
        reg_fit["homoscedasticity"] = homoscedasticity.model_dump() if homoscedasticity else None

    gev_z_fit = None
    if state.get("gev_z_fit") is not None:
        gev_z_fit = ReportService.fit_summary(state["gev_z_fit"], alpha)
        gev_z_fit["shape_selection"] = _selection_summary(state.get("gev_z_selection"), alpha)

    curves = state.get("curves") or []
    curves_meta = {
        "alpha": alpha,
        "return_periods": sorted(config.return_periods),
        "models": [curve.model for curve in curves],
        "entries": {curve.model: curve.to_frame().drop(columns="model").to_dict(orient="list") for curve in curves},
        "mixed_n_obs": state["mixed"].n_obs if state.get("mixed") is not None else None,
        "warnings": state.get("warnings", []),
    }

    return {
        "schema_version": SCHEMA_VERSION,
        "ev_fit": ev_fit,
        "reg_fit": reg_fit,
        "gev_z_fit": gev_z_fit,
        "diagnostics": {name: report.model_dump() for name, report in (state.get("diagnostics") or {}).items()},
        "curves_meta": curves_meta,
    }


def _maxima_table(state: AnalysisState) -> pd.DataFrame:
    x = state["x_maxima"].to_frame()[["year", "max"]].rename(columns={"max": "x_max"})
    z_maxima = state.get("z_maxima")
    if z_maxima is None:
        x["z_max"] = float("nan")
    else:
        z = z_maxima.to_frame()[["year", "max"]].rename(columns={"max": "z_max"})
        x = x.merge(z, on="year", how="outer")
    x["y"] = x["z_max"] - x["x_max"]
    return x.sort_values("year").reset_index(drop=True)


def _acf_table(report) -> pd.DataFrame:
    frame = pd.DataFrame({"lag": report.acf.lags, "acf": report.acf.acf, "pacf": report.acf.pacf})
    frame["conf_bound"] = report.acf.conf_bound
    return frame


def write_outputs(state: AnalysisState) -> AnalysisState:
    """Écrit report.json et les tables CSV disponibles dans config.out_dir."""
    out_dir = Path(state["config"].out_dir)
    written = [ReportService.write_json(out_dir / "report.json", build_report(state))]

    curves = state.get("curves")
    if curves:
        frame = pd.concat([curve.to_frame() for curve in curves], ignore_index=True)
        written.append(ReportService.write_csv(out_dir / "curves.csv", frame))
    if state.get("empirical") is not None:
        written.append(ReportService.write_csv(out_dir / "empirical.csv", state["empirical"]))
    if state.get("regression_bands") is not None:
        written.append(ReportService.write_csv(out_dir / "regression_bands.csv", state["regression_bands"]))

    diagnostics = state.get("diagnostics") or {}
    for name, suffix in (("ev_fit", "x"), ("regression", "residuals")):
        if name in diagnostics:
            report = diagnostics[name]
            written.append(ReportService.write_csv(out_dir / f"pp_qq_{suffix}.csv", pd.DataFrame(report.pp_qq)))
            written.append(ReportService.write_csv(out_dir / f"acf_{suffix}.csv", _acf_table(report)))

    if state.get("x_maxima") is not None:
        written.append(ReportService.write_csv(out_dir / "maxima.csv", _maxima_table(state)))

    state["written_files"] = [str(path) for path in written]
    state.setdefault("processing_steps", []).append("write_outputs")
    logger.info("💾 %d fichiers écrits dans %s", len(written), out_dir)
    return state
