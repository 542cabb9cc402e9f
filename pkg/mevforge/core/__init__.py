from .exceptions import MevError, DataParseError, FitError, NumericError, DomainError
from .distributions import (
    EvDistribution,
    GevParams,
    ParetoPoissonParams,
    NormalCond,
    gev_cdf,
    gev_pdf,
    gev_quantile,
    gev_loglik,
    gev_mean,
    gpd_loglik,
    pp_cdf,
    pp_pdf,
    pp_quantile,
    pp_loglik,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
)
from .fitting import (
    FitResult,
    ConfidenceInterval,
    QuantileBand,
    ShapeSelection,
    fit_gev,
    fit_pareto_poisson,
    fisher_information,
    param_ci,
    select_gumbel,
    select_shape,
    ev_quantile_band,
)
from .hetreg import (
    RegressionFamily,
    HetRegModel,
    PairedMaxima,
    fit_hetreg,
    predict,
    studentized_residuals,
    regression_bands,
    homoscedasticity_test,
)
from .mixed import (
    MixedModel,
    ReturnPeriodCurve,
    mixed_cdf,
    mixed_pdf,
    mixed_quantile,
    quantile_gradient,
    quantile_bands,
    return_period_curve,
    return_period_curves,
    empirical_return_periods,
)
from .reports import TestReport, AcfReport, DiagnosticsReport
from .diagnostics import (
    pit_transform,
    ks_test_std_normal,
    acf,
    ljung_box,
    pp_qq_data,
    diagnose_ev_fit,
    diagnose_regression,
)
from .simulate import SimulationConfig, SimulatedSample, simulate_case1, simulate_case2, sample_mixed

__all__ = [
    "MevError",
    "DataParseError",
    "FitError",
    "NumericError",
    "DomainError",
    "EvDistribution",
    "GevParams",
    "ParetoPoissonParams",
    "NormalCond",
    "gev_cdf",
    "gev_pdf",
    "gev_quantile",
    "gev_loglik",
    "gev_mean",
    "gpd_loglik",
    "pp_cdf",
    "pp_pdf",
    "pp_quantile",
    "pp_loglik",
    "std_normal_cdf",
    "std_normal_pdf",
    "std_normal_quantile",
    "FitResult",
    "ConfidenceInterval",
    "QuantileBand",
    "ShapeSelection",
    "fit_gev",
    "fit_pareto_poisson",
    "fisher_information",
    "param_ci",
    "select_gumbel",
    "select_shape",
    "ev_quantile_band",
    "RegressionFamily",
    "HetRegModel",
    "PairedMaxima",
    "fit_hetreg",
    "predict",
    "studentized_residuals",
    "regression_bands",
    "homoscedasticity_test",
    "MixedModel",
    "ReturnPeriodCurve",
    "mixed_cdf",
    "mixed_pdf",
    "mixed_quantile",
    "quantile_gradient",
    "quantile_bands",
    "return_period_curve",
    "return_period_curves",
    "empirical_return_periods",
    "TestReport",
    "AcfReport",
    "DiagnosticsReport",
    "pit_transform",
    "ks_test_std_normal",
    "acf",
    "ljung_box",
    "pp_qq_data",
    "diagnose_ev_fit",
    "diagnose_regression",
    "SimulationConfig",
    "SimulatedSample",
    "simulate_case1",
    "simulate_case2",
    "sample_mixed",
]
