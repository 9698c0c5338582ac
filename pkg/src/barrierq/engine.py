"""Event-driven simulator for barrier-mode parallel service systems.

Scheduling contract:

- One FIFO queue; only the head job may start tasks.
- A barrier job starts all k tasks simultaneously once k workers are idle.
- A non-barrier job seizes idle workers one at a time; the next job becomes
  head when the last task has started.
- One barrier: a worker is released the moment its task finishes.
- Two barriers: workers stay blocked until the whole job departs, then all
  k are released atomically.
- (k, l) straggler policy: the job departs at its l-th task finish and the
  k - l still-running tasks are killed.  Killed tasks contribute their
  elapsed time to consumed server time, never to useful server time.
  One barrier releases the killed workers at that instant; two barriers
  release all k at departure.
- Waiting time W(n) is last task start minus arrival; sojourn T(n) is
  departure minus arrival.

Ties at one timestamp are processed in event insertion order, so a task
finish that frees the k-th worker starts the head job at the same
timestamp, after the finish.
"""
from __future__ import annotations

import math
from array import array
from collections import deque
from dataclasses import dataclass
from heapq import heappush, heappop

import numpy as np

from . import rng as rngmod
from .model import (
    BarrierMode,
    Exponential,
    JobRecord,
    PoissonArrivals,
    SystemConfig,
    WorkloadSpec,
    demand_per_job,
    validate,
)
from .overhead import sample_overhead
from .rng import BufferedExp, BufferedUniform, RngStream

_ARRIVAL = 0
_FINISH = 1
_GATE = 2


class _Job:
    __slots__ = (
        "n", "cls", "k", "barrier", "arrival", "svc",
        "start", "task_start", "n_started", "n_completed",
        "departed", "was_queued", "server_time", "useful_time",
        "waiting", "record",
    )

    def __init__(self, n, cls, k, barrier, arrival, svc):
        self.n = n
        self.cls = cls
        self.k = k
        self.barrier = barrier
        self.arrival = arrival
        self.svc = svc
        self.start = -1.0
        self.task_start = None   # per-task starts, non-barrier only
        self.n_started = 0
        self.n_completed = 0
        self.departed = False
        self.was_queued = False
        self.server_time = 0.0
        self.useful_time = 0.0
        self.waiting = math.nan
        self.record = None


def quantile(samples, q: float) -> float:
    """Exact order-statistic quantile: the ceil(q*n)-th smallest sample."""
    assert 0.0 < q <= 1.0
    xs = np.sort(np.asarray(samples, dtype=float))
    assert xs.size > 0
    idx = max(int(math.ceil(q * xs.size)) - 1, 0)
    return float(xs[idx])


def _np(buf: array, dtype) -> np.ndarray:
    if len(buf) == 0:
        return np.empty(0, dtype=dtype)
    return np.frombuffer(buf, dtype=dtype)


def _normalized(dwell: dict | None) -> dict | None:
    if not dwell:
        return dwell
    total = sum(dwell.values())
    if total <= 0.0:
        return dwell
    return {state: t / total for state, t in dwell.items()}


@dataclass
class SimResult:
    """Per-job outcome arrays (index-aligned, sorted by job index) plus
    run-level aggregates.  Summary statistics exclude the warmup jobs."""

    seed: int
    s: int
    mode: str
    warmup_jobs: int
    n_arrived: int
    n_departed: int
    end_time: float
    job_n: np.ndarray
    job_cls: np.ndarray
    job_k: np.ndarray
    job_arrival: np.ndarray
    job_waiting: np.ndarray
    job_sojourn: np.ndarray
    job_server_time: np.ndarray
    job_useful_time: np.ndarray
    job_preempted: np.ndarray
    queue_at_arrivals: np.ndarray
    gaps: np.ndarray
    busy_time: float
    blocked_time: float
    max_busy_workers: int
    records: list[JobRecord] | None = None
    occupancy: dict[tuple[int, ...], float] | None = None
    quantile_levels: tuple[float, ...] = (0.5, 0.9, 0.99)

    def _post(self, xs: np.ndarray) -> np.ndarray:
        return xs[self.job_n >= self.warmup_jobs]

    @property
    def mean_waiting(self) -> float:
        return float(np.mean(self._post(self.job_waiting)))

    @property
    def mean_sojourn(self) -> float:
        return float(np.mean(self._post(self.job_sojourn)))

    def waiting_quantile(self, q: float) -> float:
        return quantile(self._post(self.job_waiting), q)

    def sojourn_quantile(self, q: float) -> float:
        return quantile(self._post(self.job_sojourn), q)

    @property
    def mean_server_time(self) -> float:
        return float(np.mean(self._post(self.job_server_time)))

    @property
    def mean_useful_time(self) -> float:
        return float(np.mean(self._post(self.job_useful_time)))

    @property
    def busy_fraction(self) -> float:
        return self.busy_time / (self.s * self.end_time) if self.end_time > 0 else 0.0

    def summary(self) -> dict:
        return {
            "seed": self.seed,
            "s": self.s,
            "mode": self.mode,
            "n_arrived": self.n_arrived,
            "n_departed": self.n_departed,
            "warmup_jobs": self.warmup_jobs,
            "end_time": self.end_time,
            "mean_waiting": self.mean_waiting,
            "mean_sojourn": self.mean_sojourn,
            "mean_server_time": self.mean_server_time,
            "mean_useful_time": self.mean_useful_time,
            "busy_fraction": self.busy_fraction,
            "total_server_time": float(np.sum(self.job_server_time)),
            "total_useful_time": float(np.sum(self.job_useful_time)),
            "quantiles": {
                "waiting": {str(q): self.waiting_quantile(q) for q in self.quantile_levels},
                "sojourn": {str(q): self.sojourn_quantile(q) for q in self.quantile_levels},
            },
        }


def run(
    cfg: SystemConfig,
    workload: WorkloadSpec,
    *,
    horizon_jobs: int | None = None,
    horizon_time: float | None = None,
    warmup: int | None = None,
    seed: int = 0,
    rng: RngStream | None = None,
    keep_records: bool = False,
    track_occupancy: bool = False,
    initial_backlog: int = 0,
    suppress_arrivals: bool = False,
    quantile_levels: tuple[float, ...] = (0.5, 0.9, 0.99),
) -> SimResult:
    """Simulate until horizon_jobs have departed or horizon_time is reached.

    warmup is a job-index cutoff for the summary statistics; it defaults to
    10% of the generated jobs (0 for a pure time horizon).  initial_backlog
    preloads that many jobs in the queue at time zero; combined with
    suppress_arrivals this gives a perpetually backlogged run.
    """
    errs = validate(cfg, workload)
    if errs:
        raise ValueError("; ".join(errs))
    assert horizon_jobs is not None or horizon_time is not None
    if rng is None:
        rng = RngStream(seed)
    eng = _Engine(cfg, workload, rng, keep_records, track_occupancy, quantile_levels)
    return eng.run(horizon_jobs, horizon_time, warmup, initial_backlog, suppress_arrivals)


def run_saturated(
    cfg: SystemConfig,
    workload: WorkloadSpec,
    n_jobs: int,
    *,
    seed: int = 0,
    rng: RngStream | None = None,
    warmup: int | None = None,
    track_occupancy: bool = False,
) -> SimResult:
    """Perpetually backlogged run: n_jobs preloaded at time zero, no further
    arrivals.  Start instants land in job_waiting (arrivals are at zero)."""
    return run(
        cfg,
        workload,
        horizon_jobs=n_jobs,
        warmup=warmup,
        seed=seed,
        rng=rng,
        track_occupancy=track_occupancy,
        initial_backlog=n_jobs,
        suppress_arrivals=True,
    )


def idle_gap_trace(
    cfg: SystemConfig,
    workload: WorkloadSpec,
    *,
    horizon_jobs: int,
    seed: int = 0,
    rng: RngStream | None = None,
) -> np.ndarray:
    """Gaps between the instant a queued barrier job first had its k workers
    idle and the instant it started.  Jobs that start the moment they
    arrive are excluded; with no overhead configured every gap is zero."""
    res = run(cfg, workload, horizon_jobs=horizon_jobs, seed=seed, rng=rng)
    return res.gaps


class _Engine:
    def __init__(self, cfg, workload, rng, keep_records, track_occupancy, quantile_levels):
        self.cfg = cfg
        self.workload = workload
        self.seed = rng.seed
        self.keep_records = keep_records
        self.quantile_levels = quantile_levels

        self.arrival_stream = BufferedExp(rng.child(rngmod.ARRIVALS))
        self.class_stream = BufferedUniform(rng.child(rngmod.CLASS_PICK))
        self.service_rng = rng.child(rngmod.SERVICE)
        self.service_stream = BufferedExp(self.service_rng)
        self.overhead_rng = rng.child(rngmod.OVERHEAD)

        self.classes = list(workload.classes)
        self.class_probs = np.cumsum(workload.class_probs())
        self.class_kcum = []
        self.class_kvals = []
        for c in self.classes:
            pmf = c.k_pmf()
            ks = sorted(pmf)
            self.class_kvals.append(ks)
            self.class_kcum.append(np.cumsum([pmf[kk] for kk in ks]))

        ov = cfg.overhead
        self.gate_mode = ov is not None and ov.injection == "queue_gate"
        self.per_task_mode = ov is not None and ov.injection in ("per_task", "per_task_queued")
        self.per_task_queued_only = ov is not None and ov.injection == "per_task_queued"
        if ov is not None:
            self.ov_p = ov.polling_interval
            self.ov_rate = ov.rate if ov.rate is not None else workload.arrivals.mean_rate()
        self.skl_l = cfg.skl_l
        self.track_occupancy = track_occupancy
        if track_occupancy:
            assert cfg.skl_l is not None, "occupancy tracking requires a straggler policy"

    def _next_interarrival(self) -> float:
        a = self.workload.arrivals
        if isinstance(a, PoissonArrivals):
            return self.arrival_stream.draw(a.rate)
        return a.interval

    def _pick_class(self) -> int:
        if len(self.classes) == 1:
            return 0
        u = self.class_stream.draw()
        j = int(np.searchsorted(self.class_probs, u, side="right"))
        return min(j, len(self.classes) - 1)

    def _pick_k(self, ci: int) -> int:
        ks = self.class_kvals[ci]
        if len(ks) == 1:
            return ks[0]
        u = self.class_stream.draw()
        j = int(np.searchsorted(self.class_kcum[ci], u, side="right"))
        return ks[min(j, len(ks) - 1)]

    def _draw_services(self, ci: int, k: int) -> list[float]:
        dist = self.classes[ci].service
        if isinstance(dist, Exponential):
            draw = self.service_stream.draw
            r = dist.rate
            return [draw(r) for _ in range(k)]
        return [float(dist.sample(self.service_rng)) for _ in range(k)]

    def _draw_overhead(self) -> float:
        return float(
            sample_overhead(self.overhead_rng, polling_interval=self.ov_p, rate=self.ov_rate)
        )

    def _make_job(self, n: int, t: float) -> _Job:
        ci = self._pick_class()
        k = self._pick_k(ci)
        job = _Job(n, ci, k, self.classes[ci].barrier, t, self._draw_services(ci, k))
        if self.keep_records:
            job.record = JobRecord(
                n=n, cls=ci, k=k, barrier=job.barrier, arrival=t,
                task_start=[None] * k, task_finish=[None] * k,
            )
        return job

    def run(self, horizon_jobs, horizon_time, warmup, initial_backlog, suppress_arrivals):
        cfg = self.cfg
        two_barrier = cfg.mode is BarrierMode.TWO
        skl_l = self.skl_l
        s = cfg.s
        target = horizon_jobs
        if warmup is None:
            warmup = int(0.1 * target) if target is not None else 0

        heap: list = []
        seq = 0
        queue: deque[_Job] = deque()
        idle = s
        busy = 0
        blocked = 0
        max_busy = 0
        busy_integral = 0.0
        blocked_integral = 0.0
        last_t = 0.0
        arrived = 0
        departed = 0
        now = 0.0

        out_n = array("q")
        out_cls = array("h")
        out_k = array("h")
        out_arrival = array("d")
        out_wait = array("d")
        out_sojourn = array("d")
        out_server = array("d")
        out_useful = array("d")
        out_preempted = array("h")
        qlen_samples = array("q")
        gaps = array("d")
        records: list[JobRecord] = []

        gate_job: _Job | None = None
        gate_t0 = 0.0

        # occupancy of the straggler chain: dwell time per count vector
        # (c_{k-l+1}, ..., c_k), accumulated while the queue is backlogged
        occ: dict | None = None
        occ_c: list[int] | None = None
        occ_i0 = 0
        occ_last_t = 0.0
        occ_backlogged = False
        occ_on = False
        if self.track_occupancy:
            occ = {}
            occ_k = self.classes[0].fixed_k
            occ_i0 = occ_k - skl_l + 1
            occ_c = [0] * skl_l
            occ_on = warmup == 0

        def occ_tick(t):
            nonlocal occ_last_t
            if occ_on and occ_backlogged and t > occ_last_t:
                key = tuple(occ_c)
                occ[key] = occ.get(key, 0.0) + (t - occ_last_t)
            occ_last_t = t

        def start_barrier(job: _Job, t: float, gap: float):
            nonlocal idle, busy, seq, max_busy
            k = job.k
            job.start = t
            job.n_started = k
            job.waiting = t - job.arrival
            idle -= k
            busy += k
            assert idle >= 0
            if busy > max_busy:
                max_busy = busy
            extend = self.per_task_mode and (job.was_queued or not self.per_task_queued_only)
            svc = job.svc
            rec = job.record
            for i in range(k):
                d = svc[i]
                if extend:
                    d += self._draw_overhead()
                    svc[i] = d
                if rec is not None:
                    rec.task_start[i] = t
                heappush(heap, (t + d, seq, _FINISH, job, i))
                seq += 1
            if job.was_queued:
                gaps.append(gap)
            if occ_c is not None:
                occ_tick(t)
                occ_c[skl_l - 1] += 1

        def start_some(job: _Job, t: float):
            nonlocal idle, busy, seq, max_busy
            m = min(idle, job.k - job.n_started)
            if job.task_start is None:
                job.task_start = [0.0] * job.k
            extend = self.per_task_mode and (job.was_queued or not self.per_task_queued_only)
            rec = job.record
            for _ in range(m):
                i = job.n_started
                d = job.svc[i]
                if extend:
                    d += self._draw_overhead()
                    job.svc[i] = d
                job.task_start[i] = t
                if rec is not None:
                    rec.task_start[i] = t
                heappush(heap, (t + d, seq, _FINISH, job, i))
                seq += 1
                job.n_started += 1
                idle -= 1
                busy += 1
            if busy > max_busy:
                max_busy = busy
            if job.n_started == job.k:
                job.waiting = t - job.arrival

        def try_start(t):
            nonlocal gate_job, gate_t0, seq
            if gate_job is not None:
                return
            while queue:
                hd = queue[0]
                if hd.barrier:
                    if idle < hd.k:
                        return
                    if self.gate_mode and hd.was_queued:
                        gate_job = hd
                        gate_t0 = t
                        y = self._draw_overhead()
                        heappush(heap, (t + y, seq, _GATE, hd, 0))
                        seq += 1
                        return
                    queue.popleft()
                    start_barrier(hd, t, 0.0)
                else:
                    if idle == 0:
                        return
                    start_some(hd, t)
                    if hd.n_started < hd.k:
                        return
                    queue.popleft()

        def depart(job: _Job, t: float):
            nonlocal idle, busy, blocked, departed
            k = job.k
            preempted = 0
            if skl_l is not None and skl_l < k and job.n_completed == skl_l:
                preempted = k - skl_l
                job.server_time += preempted * (t - job.start)
                if two_barrier:
                    busy -= preempted
                    blocked -= skl_l
                    idle += k
                else:
                    busy -= preempted
                    idle += preempted
            elif two_barrier:
                blocked -= k
                idle += k
            assert idle + busy + blocked == s
            job.departed = True
            out_n.append(job.n)
            out_cls.append(job.cls)
            out_k.append(k)
            out_arrival.append(job.arrival)
            out_wait.append(job.waiting)
            out_sojourn.append(t - job.arrival)
            out_server.append(job.server_time)
            out_useful.append(job.useful_time)
            out_preempted.append(preempted)
            rec = job.record
            if rec is not None:
                rec.departure = t
                rec.preempted = preempted
                rec.waiting = job.waiting
                rec.sojourn = t - job.arrival
                rec.server_time = job.server_time
                rec.useful_time = job.useful_time
                records.append(rec)
            departed += 1

        if initial_backlog > 0:
            for n in range(initial_backlog):
                job = self._make_job(n, 0.0)
                job.was_queued = True
                queue.append(job)
            arrived = initial_backlog
            occ_backlogged = True
            try_start(0.0)
        if not suppress_arrivals:
            t0 = self._next_interarrival()
            if horizon_time is None or t0 <= horizon_time:
                heappush(heap, (t0, seq, _ARRIVAL, None, 0))
                seq += 1

        track_occ = self.track_occupancy
        while heap:
            t, _, kind, job, task = heappop(heap)
            now = t
            if t > last_t:
                busy_integral += busy * (t - last_t)
                blocked_integral += blocked * (t - last_t)
                last_t = t
            if kind == _FINISH:
                if job.departed:
                    continue
                if track_occ:
                    occ_tick(t)
                    r_before = job.k - job.n_completed
                    occ_c[r_before - occ_i0] -= 1
                    if not (job.n_completed + 1 == skl_l or job.n_completed + 1 == job.k):
                        occ_c[r_before - 1 - occ_i0] += 1
                job.n_completed += 1
                dur = t - (job.start if job.barrier else job.task_start[task])
                job.server_time += dur
                job.useful_time += dur
                if job.record is not None:
                    job.record.task_finish[task] = t
                busy -= 1
                if two_barrier:
                    blocked += 1
                else:
                    idle += 1
                if job.n_completed == job.k or job.n_completed == skl_l:
                    depart(job, t)
                    if target is not None and departed >= target:
                        break
                try_start(t)
            elif kind == _ARRIVAL:
                if track_occ:
                    occ_tick(t)
                job = self._make_job(arrived, t)
                arrived += 1
                queue.append(job)
                if target is None or arrived < target:
                    ta = t + self._next_interarrival()
                    if horizon_time is None or ta <= horizon_time:
                        heappush(heap, (ta, seq, _ARRIVAL, None, 0))
                        seq += 1
                try_start(t)
                if job.n_started == 0:
                    job.was_queued = True
                qlen_samples.append(len(queue))
            else:  # _GATE
                assert gate_job is job and queue and queue[0] is job
                gate_job = None
                queue.popleft()
                start_barrier(job, t, t - gate_t0)
                try_start(t)
            if track_occ:
                occ_backlogged = len(queue) > 0
                if not occ_on and departed >= warmup:
                    occ_on = True
                    occ_last_t = now

        idx = np.argsort(_np(out_n, np.int64))
        return SimResult(
            seed=self.seed,
            s=s,
            mode=cfg.mode.value,
            warmup_jobs=warmup,
            n_arrived=arrived,
            n_departed=departed,
            end_time=now,
            job_n=_np(out_n, np.int64)[idx],
            job_cls=_np(out_cls, np.int16)[idx],
            job_k=_np(out_k, np.int16)[idx],
            job_arrival=_np(out_arrival, np.float64)[idx],
            job_waiting=_np(out_wait, np.float64)[idx],
            job_sojourn=_np(out_sojourn, np.float64)[idx],
            job_server_time=_np(out_server, np.float64)[idx],
            job_useful_time=_np(out_useful, np.float64)[idx],
            job_preempted=_np(out_preempted, np.int16)[idx],
            queue_at_arrivals=_np(qlen_samples, np.int64),
            gaps=_np(gaps, np.float64),
            busy_time=busy_integral,
            blocked_time=blocked_integral,
            max_busy_workers=max_busy,
            records=sorted(records, key=lambda r: r.n) if self.keep_records else None,
            occupancy=_normalized(occ),
            quantile_levels=self.quantile_levels,
        )


def validate_result(res: SimResult, cfg: SystemConfig, workload: WorkloadSpec) -> list[str]:
    """Check structural invariants on a run kept with records; returns the
    list of violations (empty when clean)."""
    errs: list[str] = []
    if res.records is None:
        return ["run was not made with keep_records=True"]
    last_start = -math.inf
    for rec in res.records:
        tag = f"job {rec.n}"
        starts = [ts for ts in rec.task_start if ts is not None]
        if len(starts) != rec.k:
            errs.append(f"{tag}: {rec.k - len(starts)} tasks never started")
            continue
        if any(ts < rec.arrival for ts in starts):
            errs.append(f"{tag}: task start precedes arrival")
        if rec.barrier and len(set(starts)) != 1:
            errs.append(f"{tag}: barrier tasks started at different times")
        if not math.isclose(rec.waiting, max(starts) - rec.arrival, abs_tol=1e-9):
            errs.append(f"{tag}: waiting != last task start - arrival")
        finishes = [tf for tf in rec.task_finish if tf is not None]
        n_preempted = sum(1 for tf in rec.task_finish if tf is None)
        if n_preempted != rec.preempted:
            errs.append(f"{tag}: preempted count mismatch")
        if cfg.skl_l is not None and cfg.skl_l < rec.k:
            if len(finishes) != cfg.skl_l:
                errs.append(f"{tag}: expected {cfg.skl_l} completed tasks")
        if finishes and not math.isclose(rec.departure, max(finishes), abs_tol=1e-9):
            errs.append(f"{tag}: departure != last completed task finish")
        if not math.isclose(rec.sojourn, rec.departure - rec.arrival, abs_tol=1e-9):
            errs.append(f"{tag}: sojourn mismatch")
        if rec.sojourn < rec.waiting - 1e-12:
            errs.append(f"{tag}: sojourn below waiting")
        if max(starts) < last_start - 1e-12:
            errs.append(f"{tag}: FIFO start order violated")
        last_start = max(starts)
    total_recorded = float(np.sum(res.job_server_time))
    if res.n_arrived == res.n_departed and total_recorded > 0:
        if abs(total_recorded - res.busy_time) > 1e-6 * total_recorded:
            errs.append("busy-time integral differs from per-job server time sum")
    return errs


# --- empirical stability estimation -------------------------------------------


@dataclass(frozen=True)
class DriftProbe:
    rho: float
    slope: float
    final_queue: int
    unstable: bool
    ambiguous: bool


@dataclass(frozen=True)
class StabilityEstimate:
    value: float
    lo: float
    hi: float
    inconclusive: bool
    capped: bool
    probes: tuple[DriftProbe, ...]


def _with_rate(workload: WorkloadSpec, lam: float) -> WorkloadSpec:
    return WorkloadSpec(arrivals=PoissonArrivals(lam), classes=workload.classes)


def _fast_path(cfg: SystemConfig, workload: WorkloadSpec):
    """(kernel, k, mu) when the configuration maps onto a compiled kernel:
    one barrier class, fixed k, exponential service, no stragglers or
    overhead, Poisson arrivals."""
    if cfg.skl_l is not None or cfg.overhead is not None:
        return None
    if len(workload.classes) != 1:
        return None
    c = workload.classes[0]
    if not c.barrier or c.fixed_k is None or not isinstance(c.service, Exponential):
        return None
    if not isinstance(workload.arrivals, PoissonArrivals):
        return None
    from . import fastsim

    kern = (
        fastsim.one_barrier_run
        if cfg.mode is BarrierMode.ONE
        else fastsim.two_barrier_run
    )
    return kern, c.fixed_k, c.service.rate


def drift_probe(
    cfg: SystemConfig,
    workload: WorkloadSpec,
    rho: float,
    rng: RngStream,
    *,
    probe_jobs: int = 200_000,
    slope_threshold: float = 1e-3,
    queue_threshold: int = 100,
    use_fast_path: bool = True,
) -> DriftProbe:
    """Classify utilization rho as stable or unstable from queue drift.

    Fits a least-squares line to the queue length sampled at arrivals over
    the second half of the run; unstable when the slope exceeds
    slope_threshold jobs/arrival and the final queue exceeds
    queue_threshold.  ambiguous marks runs where the two indicators
    disagree."""
    lam = rho * cfg.s / demand_per_job(cfg, workload)
    fast = _fast_path(cfg, workload) if use_fast_path else None
    if fast is not None:
        kern, k, mu = fast
        _, _, qlen = kern(probe_jobs, cfg.s, k, lam, mu, rng)
    else:
        res = run(cfg, _with_rate(workload, lam), horizon_jobs=probe_jobs, rng=rng)
        qlen = res.queue_at_arrivals
    half = qlen[len(qlen) // 2 :]
    x = np.arange(half.size, dtype=float)
    slope = float(np.polyfit(x, half.astype(float), 1)[0])
    final = int(qlen[-1])
    grew = slope > slope_threshold
    long_queue = final > queue_threshold
    return DriftProbe(
        rho=rho,
        slope=slope,
        final_queue=final,
        unstable=grew and long_queue,
        ambiguous=grew != long_queue,
    )


def estimate_max_stable_utilization(
    cfg: SystemConfig,
    workload: WorkloadSpec,
    *,
    tol: float = 0.02,
    seed: int = 0,
    rng: RngStream | None = None,
    probe_jobs: int = 200_000,
    probe_cap: float = 0.99,
    slope_threshold: float = 1e-3,
    queue_threshold: int = 100,
    use_fast_path: bool = True,
) -> StabilityEstimate:
    """Bisect on offered load for the largest utilization the system
    sustains, probing each candidate with a drift test; returns the final
    bracket midpoint.  The arrival rate of the given workload is ignored
    (it is replaced per probe); the class mix and service laws are kept.

    A probe whose indicators disagree is retried once with a fresh stream;
    the estimate is inconclusive when the deciding probe stayed ambiguous.
    """
    if rng is None:
        rng = RngStream(seed)
    probes: list[DriftProbe] = []
    kwargs = dict(
        probe_jobs=probe_jobs,
        slope_threshold=slope_threshold,
        queue_threshold=queue_threshold,
        use_fast_path=use_fast_path,
    )

    def classify(rho: float, idx: int) -> DriftProbe:
        p = drift_probe(cfg, workload, rho, rng.child(idx), **kwargs)
        if p.ambiguous:
            p2 = drift_probe(cfg, workload, rho, rng.child(10_000 + idx), **kwargs)
            p = DriftProbe(
                rho=rho,
                slope=p2.slope,
                final_queue=p2.final_queue,
                unstable=p2.unstable,
                ambiguous=p.ambiguous and p2.ambiguous,
            )
        probes.append(p)
        return p

    lo, hi = 0.0, 1.0
    first = classify(probe_cap, 0)
    capped = not first.unstable
    if capped:
        lo = probe_cap
    else:
        hi = probe_cap
        i = 1
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            p = classify(mid, i)
            if p.unstable:
                hi = mid
            else:
                lo = mid
            i += 1
    last = probes[-1]
    return StabilityEstimate(
        value=0.5 * (lo + hi),
        lo=lo,
        hi=hi,
        inconclusive=last.ambiguous,
        capped=capped,
        probes=tuple(probes),
    )
