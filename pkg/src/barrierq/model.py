"""Core model types: service distributions, job classes, system configuration.

A system is s identical workers fed by one FIFO queue.  Job n brings K(n)
tasks; barrier jobs start all K(n) tasks simultaneously, non-barrier jobs
seize idle workers one at a time.  Under the one-barrier discipline workers
are released as individual tasks finish; under the two-barrier discipline
all K(n) workers are held until the job departs.  An optional (k, l)
straggler policy lets a job depart when l of its k tasks have finished,
killing the rest.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .rng import RngStream


class BarrierMode(enum.Enum):
    ONE = "one_barrier"
    TWO = "two_barrier"


# --- task service distributions ---------------------------------------------


@dataclass(frozen=True)
class Exponential:
    rate: float

    def __post_init__(self):
        assert self.rate > 0.0

    def mean(self) -> float:
        return 1.0 / self.rate

    def sample(self, stream: RngStream, size=None):
        return stream.exponential(self.rate, size)


@dataclass(frozen=True)
class HyperExponential:
    """Mixture of exponentials: with probability probs[i] the task is
    Exp(rates[i])."""

    probs: tuple[float, ...]
    rates: tuple[float, ...]

    def __post_init__(self):
        assert len(self.probs) == len(self.rates) >= 1
        assert all(p >= 0.0 for p in self.probs)
        assert all(r > 0.0 for r in self.rates)
        assert abs(sum(self.probs) - 1.0) < 1e-12

    def mean(self) -> float:
        return sum(p / r for p, r in zip(self.probs, self.rates))

    def sample(self, stream: RngStream, size=None):
        gen = stream.generator
        if size is None:
            u = gen.random()
            rate = self.rates[_pick(self.probs, u)]
            return gen.standard_exponential() / rate
        u = gen.random(size)
        idx = np.searchsorted(np.cumsum(self.probs), u, side="right")
        idx = np.minimum(idx, len(self.rates) - 1)
        rates = np.asarray(self.rates)[idx]
        return gen.standard_exponential(size) / rates


@dataclass(frozen=True)
class Deterministic:
    value: float

    def __post_init__(self):
        assert self.value >= 0.0

    def mean(self) -> float:
        return self.value

    def sample(self, stream: RngStream, size=None):
        if size is None:
            return self.value
        return np.full(size, self.value)


ServiceDist = Exponential | HyperExponential | Deterministic


def _pick(probs, u: float) -> int:
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if u < acc:
            return i
    return len(probs) - 1


def sample_service(dist: ServiceDist, stream: RngStream, size=None):
    """Draw task service durations from dist using the given stream."""
    return dist.sample(stream, size)


# --- arrivals ----------------------------------------------------------------


@dataclass(frozen=True)
class PoissonArrivals:
    rate: float

    def __post_init__(self):
        assert self.rate > 0.0

    def mean_rate(self) -> float:
        return self.rate


@dataclass(frozen=True)
class DeterministicArrivals:
    interval: float

    def __post_init__(self):
        assert self.interval > 0.0

    def mean_rate(self) -> float:
        return 1.0 / self.interval


ArrivalProcess = PoissonArrivals | DeterministicArrivals


# --- job classes and workload ------------------------------------------------


@dataclass(frozen=True)
class JobClass:
    """One class of jobs: mixture weight, barrier discipline flag, per-job
    parallelism (fixed int or pmf over ints), task service distribution."""

    weight: float
    barrier: bool
    k: int | dict[int, float]
    service: ServiceDist
    name: str = ""

    def __post_init__(self):
        assert self.weight > 0.0
        if isinstance(self.k, int):
            assert self.k >= 1
        else:
            assert len(self.k) >= 1
            assert all(isinstance(kk, int) and kk >= 1 for kk in self.k)
            assert all(p >= 0.0 for p in self.k.values())
            assert abs(sum(self.k.values()) - 1.0) < 1e-12

    @property
    def fixed_k(self) -> int | None:
        return self.k if isinstance(self.k, int) else None

    def k_support(self) -> list[int]:
        if isinstance(self.k, int):
            return [self.k]
        return sorted(self.k)

    def k_pmf(self) -> dict[int, float]:
        if isinstance(self.k, int):
            return {self.k: 1.0}
        return dict(self.k)

    def k_max(self) -> int:
        return max(self.k_support())

    def mean_k(self) -> float:
        return sum(kk * p for kk, p in self.k_pmf().items())


@dataclass(frozen=True)
class WorkloadSpec:
    arrivals: ArrivalProcess
    classes: tuple[JobClass, ...]

    def __post_init__(self):
        assert len(self.classes) >= 1
        total = sum(c.weight for c in self.classes)
        assert total > 0.0

    def class_probs(self) -> list[float]:
        total = sum(c.weight for c in self.classes)
        return [c.weight / total for c in self.classes]


# --- overhead ----------------------------------------------------------------


@dataclass(frozen=True)
class OverheadConfig:
    """Worker-revival overhead.

    The revival delay Y is the minimum of a polling timer, uniform on
    (0, polling_interval), and the wait for the next system event,
    exponential with the given rate (None: use the workload arrival rate).
    injection selects where Y enters the simulation:

    - "queue_gate": when a queued barrier job first has its k workers idle,
      one draw of Y elapses before the job starts (the k revivals complete
      together).  Default; reproduces the measured gap distribution.
    - "per_task": every task's service duration is extended by its own Y.
    - "per_task_queued": as per_task, but only for jobs that waited.
    """

    polling_interval: float = 1.0
    rate: float | None = None
    injection: str = "queue_gate"

    def __post_init__(self):
        assert self.polling_interval > 0.0
        assert self.rate is None or self.rate >= 0.0
        assert self.injection in ("queue_gate", "per_task", "per_task_queued")


# --- system ------------------------------------------------------------------


@dataclass(frozen=True)
class SystemConfig:
    s: int
    mode: BarrierMode = BarrierMode.ONE
    skl_l: int | None = None
    overhead: OverheadConfig | None = None

    def __post_init__(self):
        if isinstance(self.mode, str):
            object.__setattr__(self, "mode", BarrierMode(self.mode))
        assert self.s >= 1
        if self.skl_l is not None:
            assert self.skl_l >= 1


def validate(cfg: SystemConfig, workload: WorkloadSpec) -> list[str]:
    """Return every violated model constraint (empty list when consistent)."""
    errs = []
    for i, c in enumerate(workload.classes):
        label = c.name or f"class[{i}]"
        if c.k_max() > cfg.s:
            errs.append(f"{label}: parallelism {c.k_max()} exceeds s={cfg.s}")
        if cfg.mode is BarrierMode.TWO and not c.barrier:
            errs.append(f"{label}: two-barrier mode requires barrier classes")
    if cfg.skl_l is not None:
        if len(workload.classes) != 1:
            errs.append("straggler policy requires a single job class")
        else:
            c = workload.classes[0]
            if c.fixed_k is None:
                errs.append("straggler policy requires fixed parallelism k")
            elif not 1 <= cfg.skl_l <= c.fixed_k:
                errs.append(
                    f"straggler threshold l={cfg.skl_l} outside 1..k={c.fixed_k}"
                )
            if not c.barrier:
                errs.append("straggler policy requires a barrier class")
            if not isinstance(c.service, Exponential):
                errs.append("straggler policy requires exponential service")
    return errs


def demand_per_job(cfg: SystemConfig, workload: WorkloadSpec) -> float:
    """Mean total server time one job consumes.  Under a (k, l) straggler
    policy the killed tasks cap the demand at l/mu per job."""
    if cfg.skl_l is not None:
        c = workload.classes[0]
        return cfg.skl_l / c.service.rate
    return sum(
        p * c.mean_k() * c.service.mean()
        for p, c in zip(workload.class_probs(), workload.classes)
    )


def utilization(cfg: SystemConfig, workload: WorkloadSpec) -> float:
    """Offered load: arrival rate times mean per-job total server demand,
    divided by s."""
    return workload.arrivals.mean_rate() * demand_per_job(cfg, workload) / cfg.s


def single_class(
    s: int,
    k: int | dict[int, float],
    lam: float,
    mu: float,
    mode: BarrierMode = BarrierMode.ONE,
    barrier: bool = True,
    skl_l: int | None = None,
    overhead: OverheadConfig | None = None,
) -> tuple[SystemConfig, WorkloadSpec]:
    """Convenience constructor for the common one-class exponential setup."""
    cfg = SystemConfig(s=s, mode=mode, skl_l=skl_l, overhead=overhead)
    wl = WorkloadSpec(
        arrivals=PoissonArrivals(lam),
        classes=(JobClass(weight=1.0, barrier=barrier, k=k, service=Exponential(mu)),),
    )
    errs = validate(cfg, wl)
    if errs:
        raise ValueError("; ".join(errs))
    return cfg, wl


# --- job records --------------------------------------------------------------


@dataclass
class JobRecord:
    """Full per-job trace, emitted when a run is asked to keep records."""

    n: int
    cls: int
    k: int
    barrier: bool
    arrival: float
    task_start: list[float | None] = field(default_factory=list)
    task_finish: list[float | None] = field(default_factory=list)
    departure: float = math.nan
    preempted: int = 0
    waiting: float = math.nan
    sojourn: float = math.nan
    server_time: float = 0.0
    useful_time: float = 0.0
