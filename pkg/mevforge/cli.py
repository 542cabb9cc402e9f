"""
Interface en ligne de commande de mevforge.

Sous-commandes : fit-ev, fit-reg, mixed-curve, diagnose, simulate, full-run.
Codes de sortie : 2 fichier mal formé, 3 ajustement non convergé ou impossible,
4 échec numérique.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

from pydantic import ValidationError

from mevforge.core.exceptions import MevError
from mevforge.core.mixed import MixedModel, return_period_curve
from mevforge.core.simulate import SimulationConfig, simulate
from mevforge.io.services.report_service import ReportService
from mevforge.io.services.series_service import SeriesService
from mevforge.pipeline.graphs.analysis_graph import run_full_analysis
from mevforge.pipeline.nodes.diagnostics import run_diagnostics
from mevforge.pipeline.nodes.ev_fitting import fit_gev_x, fit_pareto_poisson_x
from mevforge.pipeline.nodes.loading import load_series
from mevforge.pipeline.nodes.outputs import build_report
from mevforge.pipeline.nodes.regression import fit_regression
from mevforge.pipeline.state.analysis_state import AnalysisState
from mevforge.utils.config import AnalysisConfig, set_config

logger = logging.getLogger("mevforge")

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_NOT_CONVERGED = 3


def _analysis_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--ev", choices=["gev", "pp"], help="Modèle VE des maxima de réanalyse")
    parent.add_argument("--threshold", type=float, help="Seuil u du modèle Pareto-Poisson")
    parent.add_argument("--family", choices=["linear", "power"], help="Famille de la régression")
    parent.add_argument("--alpha", type=float, help="Niveau de signification")
    parent.add_argument("--T", dest="return_periods", type=float, nargs="+", help="Périodes de retour (années)")
    parent.add_argument("--seed", type=int, help="Graine des simulations")
    parent.add_argument("--out-dir", type=Path, help="Répertoire des résultats")
    parent.add_argument("--coverage-floor", type=float, help="Couverture annuelle minimale")
    parent.add_argument("--no-gumbel-selection", action="store_true", help="Désactive le test ξ = 0")
    parent.add_argument("--debug", action="store_true", help="Journalisation détaillée")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mevforge", description="Modèle mixte de valeurs extrêmes")
    sub = parser.add_subparsers(dest="command", required=True)
    options = _analysis_options()

    def add(name: str, help_text: str, instrumental: Optional[bool]) -> argparse.ArgumentParser:
        command = sub.add_parser(name, parents=[options], help=help_text)
        command.add_argument("--reanalysis", type=Path, required=True, help="Série de réanalyse")
        if instrumental is not None:
            command.add_argument("--instrumental", type=Path, required=instrumental, help="Série instrumentale")
        return command

    add("fit-ev", "Ajuste la loi VE sur les maxima de réanalyse", None)
    add("fit-reg", "Ajuste la régression hétéroscédastique des différences", True)
    add("mixed-curve", "Courbe de période de retour du modèle mixte", True)
    add("diagnose", "Diagnostics des ajustements", False)
    add("full-run", "Analyse complète (étapes 1 à 4)", True)

    simulation = sub.add_parser("simulate", parents=[options], help="Écrit un échantillon synthétique")
    simulation.add_argument("--case", type=int, choices=[1, 2], default=1)
    simulation.add_argument("--years", type=int, default=1000)
    simulation.add_argument("--paired-years", type=int, default=None)
    simulation.add_argument("--poisson-counts", action="store_true")
    return parser


def build_config(args: argparse.Namespace) -> AnalysisConfig:
    """Configuration de l'environnement surchargée par les options de la ligne de commande"""
    overrides = {
        "ev_model": args.ev,
        "threshold": args.threshold,
        "family": args.family,
        "alpha": args.alpha,
        "return_periods": args.return_periods,
        "seed": args.seed,
        "out_dir": args.out_dir,
        "coverage_floor": args.coverage_floor,
    }
    overrides = {key: value for key, value in overrides.items() if value is not None}
    if args.no_gumbel_selection:
        overrides["gumbel_selection"] = False
    if args.debug:
        overrides["debug"] = True
    config = AnalysisConfig(**overrides)
    set_config(config)
    return config


def _initial_state(args: argparse.Namespace, config: AnalysisConfig) -> AnalysisState:
    instrumental = getattr(args, "instrumental", None)
    return {
        "reanalysis_path": str(args.reanalysis),
        "instrumental_path": str(instrumental) if instrumental else None,
        "config": config,
        "processing_steps": [],
        "warnings": [],
    }


def _fit_ev(state: AnalysisState) -> AnalysisState:
    if state["config"].ev_model == "pp":
        return fit_pareto_poisson_x(state)
    return fit_gev_x(state)


def _converged(state: AnalysisState) -> bool:
    fits = [state.get(key) for key in ("ev_fit", "reg_fit", "gev_z_fit")]
    return all(fit.converged for fit in fits if fit is not None)


def cmd_fit_ev(args, config) -> AnalysisState:
    state = _fit_ev(load_series(_initial_state(args, config)))
    report = build_report(state)
    ReportService.write_json(Path(config.out_dir) / "ev_fit.json",
                             {"schema_version": report["schema_version"], "ev_fit": report["ev_fit"]})
    return state


def cmd_fit_reg(args, config) -> AnalysisState:
    state = fit_regression(load_series(_initial_state(args, config)))
    report = build_report(state)
    ReportService.write_json(Path(config.out_dir) / "reg_fit.json",
                             {"schema_version": report["schema_version"], "reg_fit": report["reg_fit"]})
    if state.get("regression_bands") is not None:
        ReportService.write_csv(Path(config.out_dir) / "regression_bands.csv", state["regression_bands"])
    return state


def cmd_mixed_curve(args, config) -> AnalysisState:
    state = fit_regression(_fit_ev(load_series(_initial_state(args, config))))
    mixed = MixedModel.from_fits(state["ev_fit"], state["reg_fit"], config)
    curve = return_period_curve(mixed, config.return_periods, config.alpha)
    state["mixed"] = mixed
    state["curves"] = [curve]
    ReportService.write_csv(Path(config.out_dir) / "curves.csv", curve.to_frame())
    for entry in curve.entries:
        print(f"  T={entry.T:>7g}  z={entry.z:.4f}  [{entry.lo:.4f}, {entry.hi:.4f}]")
    return state


def cmd_diagnose(args, config) -> AnalysisState:
    state = _fit_ev(load_series(_initial_state(args, config)))
    if state.get("paired") is not None:
        state = fit_regression(state)
    state = run_diagnostics(state)
    report = build_report(state)
    ReportService.write_json(Path(config.out_dir) / "diagnostics.json",
                             {"schema_version": report["schema_version"], "diagnostics": report["diagnostics"]})
    for name, diagnostics in state["diagnostics"].items():
        p_values = ", ".join(f"{r.p_value:.4f}" for r in diagnostics.ljung_box)
        print(f"  {name}: KS p={diagnostics.ks.p_value:.4f} ; Ljung-Box p=[{p_values}]")
    return state


def cmd_full_run(args, config) -> AnalysisState:
    state = run_full_analysis(args.reanalysis, args.instrumental, config)
    for path in state.get("written_files", []):
        print(f"  💾 {path}")
    return state


def cmd_simulate(args, config) -> None:
    factory = SimulationConfig.case1 if args.case == 1 else SimulationConfig.case2
    sim_config = factory(years=args.years, seed=config.seed or 0, paired_years=args.paired_years,
                         poisson_counts=args.poisson_counts)
    sample = simulate(sim_config)
    for path in SeriesService.write_simulation(sample, config.out_dir):
        print(f"  💾 {path}")
    return None


COMMANDS: Dict[str, Callable] = {
    "fit-ev": cmd_fit_ev,
    "fit-reg": cmd_fit_reg,
    "mixed-curve": cmd_mixed_curve,
    "diagnose": cmd_diagnose,
    "simulate": cmd_simulate,
    "full-run": cmd_full_run,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Point d'entrée de la CLI ; renvoie le code de sortie"""
    args = build_parser().parse_args(argv)
    try:
        config = build_config(args)
    except ValidationError as e:
        print(f"❌ Configuration invalide: {e.errors()[0]['msg']}", file=sys.stderr)
        return EXIT_PARSE

    logging.basicConfig(level=logging.DEBUG if config.debug else logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    if config.debug:
        print(config.debug_info())

    print(f"🎈 mevforge {args.command}")
    try:
        state = COMMANDS[args.command](args, config)
    except MevError as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code

    if state is not None:
        for warning in state.get("warnings", []):
            print(f"⚠️ {warning}")
        if not _converged(state):
            print("❌ Au moins un ajustement n'a pas convergé", file=sys.stderr)
            return EXIT_NOT_CONVERGED
    print("✅ Terminé")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
