"""Density, volatility and volatility-of-volatility estimators.

Non-parametric joint and marginal densities come from finite differences of
the empirical CDF, parametric densities from least-squares Taylor
polynomials, and volatility / vol-of-vol from relative price and volatility
increments.
"""

from .errors import EstimkitError
from .npdensity import (
    DensityCurve,
    DensitySurface,
    integrate_out,
    joint_density_np,
    marginal_density_np,
    normalize,
)
from .paramdensity import (
    FitReport,
    Polynomial1D,
    PolynomialDensity,
    conditional_density,
    cumulative,
    design_matrix,
    eval_density,
    fit_polynomial_density,
    marginal_by_integration,
    normalize_poly,
)
from .series import (
    AnalyticCDF,
    EmpiricalCDF,
    Grid,
    PriceSeries,
    SamplePairs,
    build_empirical_cdf,
    make_grid,
)
from .synthlab import (
    ErrorReport,
    GbmParams,
    HestonParams,
    error_report,
    gen_bivariate_gaussian,
    gen_gbm,
    gen_heston,
    kde_density,
)
from .volatility import VolSeries, VolVolSeries, rolling_mean, vol_series, volvol_series

__version__ = "0.1.0"

__all__ = [
    "AnalyticCDF", "DensityCurve", "DensitySurface", "EmpiricalCDF", "ErrorReport", "EstimkitError",
    "FitReport", "GbmParams", "Grid", "HestonParams", "Polynomial1D", "PolynomialDensity", "PriceSeries",
    "SamplePairs", "VolSeries", "VolVolSeries", "build_empirical_cdf", "conditional_density", "cumulative",
    "design_matrix", "error_report", "eval_density", "fit_polynomial_density", "gen_bivariate_gaussian",
    "gen_gbm", "gen_heston", "integrate_out", "joint_density_np", "kde_density", "make_grid",
    "marginal_by_integration", "marginal_density_np", "normalize", "normalize_poly", "rolling_mean",
    "vol_series", "volvol_series",
]
