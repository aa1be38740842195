"""Numerical laboratory for wide-band over-the-air function computation:
sub-function allocation across sub-carriers, achievable computation-rate
families, and sponge-squeezing optimal power allocation."""

from .combinatorics import (
    EnumerationCapError,
    SubcarrierShares,
    count_combinations,
    count_subfunction_sets,
    enumerate_combinations,
    enumerate_subfunction_sets,
    expected_subcarrier_share,
    is_valid_partition,
)
from .core import (
    ChannelTensor,
    SimParams,
    cplus,
    draw_channel,
    order_indexes,
    snr_db_to_linear,
)
from .experiments import (
    ResultRow,
    SweepResult,
    SweepSpec,
    optimal_subfunction_count,
    rate_sfa_opa,
    run_selftest,
    run_sweep,
)
from .power import (
    ConvergenceError,
    KKTReport,
    PowerSolution,
    allocate_average,
    build_assignment,
    equal_split_eta,
    objective_rate,
    oracle_solve,
    sponge_squeeze,
    verify_kkt,
)
from .rates import (
    GammaEstimate,
    RateEstimate,
    estimate_gamma,
    rate_conventional,
    rate_direct_ofdm,
    rate_general,
    rate_opportunistic,
    rate_sfa_avg,
    subfunction_rate_instant,
)
from .sources import (
    DataMatrix,
    FunctionSpec,
    arithmetic_sum,
    eval_desired,
    eval_subfunction,
    mean_function,
    reconstruct,
    sample_data_matrix,
    type_function,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelTensor",
    "ConvergenceError",
    "DataMatrix",
    "EnumerationCapError",
    "FunctionSpec",
    "GammaEstimate",
    "KKTReport",
    "PowerSolution",
    "RateEstimate",
    "ResultRow",
    "SimParams",
    "SubcarrierShares",
    "SweepResult",
    "SweepSpec",
    "allocate_average",
    "arithmetic_sum",
    "build_assignment",
    "count_combinations",
    "count_subfunction_sets",
    "cplus",
    "draw_channel",
    "enumerate_combinations",
    "enumerate_subfunction_sets",
    "equal_split_eta",
    "estimate_gamma",
    "eval_desired",
    "eval_subfunction",
    "expected_subcarrier_share",
    "is_valid_partition",
    "mean_function",
    "objective_rate",
    "optimal_subfunction_count",
    "oracle_solve",
    "order_indexes",
    "rate_conventional",
    "rate_direct_ofdm",
    "rate_general",
    "rate_opportunistic",
    "rate_sfa_avg",
    "rate_sfa_opa",
    "reconstruct",
    "run_selftest",
    "run_sweep",
    "sample_data_matrix",
    "snr_db_to_linear",
    "sponge_squeeze",
    "subfunction_rate_instant",
    "type_function",
    "verify_kkt",
]
