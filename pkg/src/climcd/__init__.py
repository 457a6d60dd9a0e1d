"""Confidence distributions and confidence curves for climate trend questions."""

__version__ = "0.1.0"

from .confidence import (
    ConfidenceCurve,
    ConfidenceDistribution,
    ConfidenceInterval,
    cc_from_cd,
    cc_rho,
    cd_rho,
    deviance_to_cc,
    profile_cc,
)
from .extremes import (
    GpdFit,
    GPDEstimator,
    SeasonModel,
    gpd_fit,
    gpd_loglik,
    profile_cc_p,
    season_exceed_prob,
    shock_barometer,
    transform,
)
from .fusion import SourceCC, chisq_sd_cd, fuse, nonparam_quantile_cd, normal_conversion, normal_prior_cd
from .gls_ar import ARTrendRegressor, GlsArFit, GlsArModel, aic, fit_lagged, fit_mle, fit_ols, loglik
from .monitoring import (
    BridgeProcess,
    NullQuantiles,
    inflation_factor,
    loglik_bridge,
    mean_bridge,
    param_bridges,
    simulate_null_quantiles,
    slope_bridge,
)
from .prediction import LinearFitSummary, TrendRegressor, crossing_cap, crossing_cc, predict_cd
from .segmented import SegmentedFit, SegmentedRegressor, compare_trends, fit_segmented, profile_loglik
from .series import GappedSeries, center, lagged_design, load_csv, load_monthly_csv, winter_average_lags

__all__ = [name for name in dir() if not name.startswith("_")]
