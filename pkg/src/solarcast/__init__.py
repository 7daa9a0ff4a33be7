"""Short-term solar power forecasting with FLNN, ELM and EELM models."""

from .expansion import ExpansionConfig, expand_matrix, expand_pattern, expand_scalar
from .lstsq import LinearSystem, pinv, residual_norm, solve_min_norm
from .metrics import EvalReport, cc2, evaluate, mae, rmse, smape
from .models import (
    EelmState,
    ElmState,
    FlnnState,
    TrainOutcome,
    eelm_train,
    elm_init,
    elm_train,
    flnn_train,
    measure_tt,
    predict,
    state_from_dict,
    state_to_dict,
)
from .series import (
    PatternSet,
    Resolution,
    ScaleParams,
    Season,
    SeasonWindow,
    TimeSeries,
    apply_scale,
    filter_season,
    fit_scale,
    generate_synthetic,
    invert_scale,
    make_patterns,
    parse_csv,
    resample_hourly,
    split_patterns,
    write_csv,
)

__version__ = "0.1.0"
