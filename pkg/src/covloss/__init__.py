"""covloss: Monte Carlo engine for cleared-portfolio credit losses.

The package samples a heavy-tailed factor model of joint member defaults
and exposures, pushes the scenarios through a clearing-house margin and
default-fund waterfall, and estimates the surviving reference member's
expected credit loss and economic capital over correlation grids with
common random numbers. A companion pricer does the same dependence
sensitivity analysis for CDO tranche legs, and a small property-testing
lab certifies the supermodularity structure the monotonicity statements
rest on.
"""

from .ccp import (
    ClearingSetup,
    MarginSpec,
    allocate_default_fund,
    check_clearing_condition,
    compute_cover2_and_df,
    compute_im,
    compute_sloim,
    student_t_quantile,
)
from .cdo import (
    CdoSweepResult,
    LegPrices,
    LossPathBatch,
    ObligorSpec,
    TrancheSpec,
    correlation_sweep,
    default_thresholds,
    price_legs,
    simulate_loss_paths,
)
from .factors import (
    DegenerateConditioningError,
    EllipticalParams,
    FactorModel,
    FactorSample,
    InvalidModelError,
    RawDraws,
    RngStream,
    ScenarioBatch,
    ValidityVerdict,
    assemble_batch,
    conditional_params,
    draw_raw,
    sample_batch,
    validate_model,
)
from .loss import (
    LossSpec,
    LossVector,
    allocation_coefficient,
    generic_loss,
    member_loss,
)
from .members import MemberSpec, MemberUniverse
from .risk import (
    RiskReport,
    WeightedSample,
    batch_statistics,
    cecl,
    economic_capital,
    empirical_var,
    expected_shortfall,
    survival_weights,
    value_at_risk,
)
from .supermod import (
    GridSpec,
    GridTooLargeError,
    IncDiffReport,
    MonotoneReport,
    NonStraddlingGridError,
    check_ccp_allocation_supermodular,
    check_ccp_loss_supermodular,
    check_increasing_differences,
    check_nondecreasing,
    default_float_tol,
)
from .sweep import (
    CdoConfig,
    ConfigError,
    MonotonicityReport,
    RunConfig,
    SweepResult,
    cdo_monotonicity_jsonable,
    check_monotonicity,
    run_cdo_sweep,
    run_sweep,
    write_cdo_csv,
    write_json,
    write_sweep_csv,
)

__version__ = "0.1.0"

__all__ = [
    "CdoConfig",
    "CdoSweepResult",
    "ClearingSetup",
    "ConfigError",
    "DegenerateConditioningError",
    "EllipticalParams",
    "FactorModel",
    "FactorSample",
    "GridSpec",
    "GridTooLargeError",
    "IncDiffReport",
    "InvalidModelError",
    "LegPrices",
    "LossPathBatch",
    "LossSpec",
    "LossVector",
    "MarginSpec",
    "MemberSpec",
    "MemberUniverse",
    "MonotoneReport",
    "MonotonicityReport",
    "NonStraddlingGridError",
    "ObligorSpec",
    "RawDraws",
    "RiskReport",
    "RngStream",
    "RunConfig",
    "ScenarioBatch",
    "SweepResult",
    "TrancheSpec",
    "ValidityVerdict",
    "WeightedSample",
    "allocate_default_fund",
    "allocation_coefficient",
    "assemble_batch",
    "batch_statistics",
    "cdo_monotonicity_jsonable",
    "cecl",
    "check_ccp_allocation_supermodular",
    "check_ccp_loss_supermodular",
    "check_clearing_condition",
    "check_increasing_differences",
    "check_monotonicity",
    "check_nondecreasing",
    "compute_cover2_and_df",
    "compute_im",
    "compute_sloim",
    "conditional_params",
    "correlation_sweep",
    "default_float_tol",
    "default_thresholds",
    "draw_raw",
    "economic_capital",
    "empirical_var",
    "expected_shortfall",
    "generic_loss",
    "member_loss",
    "price_legs",
    "run_cdo_sweep",
    "run_sweep",
    "sample_batch",
    "simulate_loss_paths",
    "student_t_quantile",
    "survival_weights",
    "validate_model",
    "value_at_risk",
    "write_cdo_csv",
    "write_json",
    "write_sweep_csv",
]
