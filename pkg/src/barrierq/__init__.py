"""Simulation and analysis toolkit for barrier-mode parallel server queues."""

from .bounds import (
    ServiceProcessSpec,
    TailBound,
    sojourn_cdf,
    sojourn_quantile,
    waiting_quantile,
)
from .ctmc import SklCtmcResult, max_utilization_1barrier_skl, stationary_occupancy
from .engine import (
    SimResult,
    StabilityEstimate,
    estimate_max_stable_utilization,
    idle_gap_trace,
    run,
    run_saturated,
    validate_result,
)
from .model import (
    BarrierMode,
    Deterministic,
    Exponential,
    HyperExponential,
    JobClass,
    OverheadConfig,
    PoissonArrivals,
    SystemConfig,
    WorkloadSpec,
    single_class,
    utilization,
    validate,
)
from .overhead import overhead_ccdf, overhead_mean, overhead_pdf, sample_overhead
from .rng import RngStream
from .stability import (
    SklStability,
    harmonic,
    max_util_1barrier,
    max_util_2barrier,
    mean_start_overhead,
    order_stat_mean,
    skl_2barrier,
    skl_task_throughput,
    useful_fraction,
)

__version__ = "0.1.0"

__all__ = [
    "BarrierMode",
    "Deterministic",
    "Exponential",
    "HyperExponential",
    "JobClass",
    "OverheadConfig",
    "PoissonArrivals",
    "RngStream",
    "ServiceProcessSpec",
    "SimResult",
    "SklCtmcResult",
    "SklStability",
    "StabilityEstimate",
    "SystemConfig",
    "TailBound",
    "WorkloadSpec",
    "estimate_max_stable_utilization",
    "harmonic",
    "idle_gap_trace",
    "max_util_1barrier",
    "max_util_2barrier",
    "max_utilization_1barrier_skl",
    "mean_start_overhead",
    "order_stat_mean",
    "overhead_ccdf",
    "overhead_mean",
    "overhead_pdf",
    "run",
    "run_saturated",
    "sample_overhead",
    "single_class",
    "skl_2barrier",
    "skl_task_throughput",
    "sojourn_cdf",
    "sojourn_quantile",
    "stationary_occupancy",
    "useful_fraction",
    "utilization",
    "validate",
    "validate_result",
    "waiting_quantile",
]
