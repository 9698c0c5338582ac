"""Event-driven simulator checked against classical queueing results and
its own per-run invariants."""
import math

import numpy as np
import pytest

from barrierq.engine import (
    estimate_max_stable_utilization,
    idle_gap_trace,
    quantile,
    run,
    run_saturated,
    validate_result,
)
from barrierq.model import (
    BarrierMode,
    Deterministic,
    DeterministicArrivals,
    Exponential,
    HyperExponential,
    JobClass,
    OverheadConfig,
    PoissonArrivals,
    SystemConfig,
    WorkloadSpec,
    single_class,
)


def erlang_c_wait(s, lam, mu):
    """Mean queueing delay in an M/M/s system."""
    a = lam / mu
    rho = a / s
    s_fact = math.factorial(s)
    head = sum(a**i / math.factorial(i) for i in range(s))
    tail = a**s / s_fact
    c = tail / ((1 - rho) * head + tail)
    return c / (s * mu - lam)


def test_quantile_is_exact_order_statistic():
    x = np.array([5.0, 1.0, 3.0, 2.0, 4.0])
    assert quantile(x, 0.2) == 1.0
    assert quantile(x, 0.21) == 2.0
    assert quantile(x, 0.5) == 3.0
    assert quantile(x, 1.0) == 5.0
    assert quantile(x, 0.001) == 1.0


def test_mm1_waiting_and_sojourn():
    cfg, wl = single_class(s=1, k=1, lam=0.5, mu=1.0)
    res = run(cfg, wl, horizon_jobs=400_000, seed=101)
    assert res.mean_sojourn == pytest.approx(2.0, abs=0.05)
    assert res.mean_waiting == pytest.approx(1.0, abs=0.05)
    # exact queue-wait quantile: atom at zero then a shifted exponential
    tau90 = math.log((1 - 0.9) / 0.5) / -0.5
    assert res.waiting_quantile(0.9) == pytest.approx(tau90, rel=0.05)


def test_mms_nonbarrier_matches_erlang_c():
    cfg, wl = single_class(s=4, k=1, lam=3.0, mu=1.0, barrier=False)
    res = run(cfg, wl, horizon_jobs=400_000, seed=7)
    assert res.mean_waiting == pytest.approx(erlang_c_wait(4, 3.0, 1.0), abs=0.03)
    assert res.mean_sojourn == pytest.approx(res.mean_waiting + 1.0, abs=0.03)


def test_deterministic_barrier_timeline():
    # two workers, full-width jobs, unit service, arrivals every 0.6:
    # each job starts when its predecessor departs
    wl = WorkloadSpec(
        arrivals=DeterministicArrivals(0.6),
        classes=(JobClass(weight=1.0, barrier=True, k=2, service=Deterministic(1.0)),),
    )
    cfg = SystemConfig(s=2)
    res = run(cfg, wl, horizon_jobs=4, warmup=0, seed=0, keep_records=True)
    assert validate_result(res, cfg, wl) == []
    waits = [round(w, 12) for w in res.job_waiting]
    assert waits == [0.0, 0.4, 0.8, 1.2]
    assert [round(t, 12) for t in res.job_sojourn] == [1.0, 1.4, 1.8, 2.2]


def test_split_merge_equivalence_when_k_spans_all_workers():
    for skl_l in (None, 5):
        one = single_class(s=8, k=8, lam=0.2, mu=1.0, mode="one_barrier", skl_l=skl_l)
        two = single_class(s=8, k=8, lam=0.2, mu=1.0, mode="two_barrier", skl_l=skl_l)
        r1 = run(*one, horizon_jobs=20_000, seed=33)
        r2 = run(*two, horizon_jobs=20_000, seed=33)
        assert (r1.job_waiting == r2.job_waiting).all()
        assert (r1.job_sojourn == r2.job_sojourn).all()
        assert (r1.job_server_time == r2.job_server_time).all()


def test_same_seed_reproduces_different_seed_does_not():
    cfg, wl = single_class(s=4, k=2, lam=0.5, mu=1.0)
    a = run(cfg, wl, horizon_jobs=5_000, seed=9)
    b = run(cfg, wl, horizon_jobs=5_000, seed=9)
    c = run(cfg, wl, horizon_jobs=5_000, seed=10)
    assert (a.job_sojourn == b.job_sojourn).all()
    assert not (a.job_sojourn == c.job_sojourn).all()


MIXED_CASES = [
    ("one_barrier_mix", SystemConfig(s=8), (
        JobClass(weight=2.0, barrier=True, k=4, service=Exponential(1.0)),
        JobClass(weight=1.0, barrier=False, k=2, service=HyperExponential((0.5, 0.5), (0.5, 2.0))),
    ), 0.4),
    ("random_k", SystemConfig(s=8), (
        JobClass(weight=1.0, barrier=True, k={2: 0.5, 6: 0.5}, service=Exponential(1.0)),
    ), 0.4),
    ("two_barrier", SystemConfig(s=9, mode=BarrierMode.TWO), (
        JobClass(weight=1.0, barrier=True, k=4, service=Exponential(1.0)),
    ), 0.2),
    ("straggler", SystemConfig(s=8, skl_l=2), (
        JobClass(weight=1.0, barrier=True, k=4, service=Exponential(1.0)),
    ), 0.5),
    ("gate_overhead", SystemConfig(s=4, overhead=OverheadConfig(0.2, 2.0)), (
        JobClass(weight=1.0, barrier=True, k=2, service=Exponential(1.0)),
    ), 0.3),
    ("per_task_overhead",
     SystemConfig(s=4, overhead=OverheadConfig(0.2, 2.0, injection="per_task")), (
        JobClass(weight=1.0, barrier=True, k=2, service=Exponential(1.0)),
    ), 0.3),
]


@pytest.mark.parametrize("name,cfg,classes,lam", MIXED_CASES, ids=[c[0] for c in MIXED_CASES])
def test_run_invariants_hold(name, cfg, classes, lam):
    wl = WorkloadSpec(arrivals=PoissonArrivals(lam), classes=classes)
    res = run(cfg, wl, horizon_jobs=8_000, seed=17, keep_records=True)
    assert validate_result(res, cfg, wl) == []
    assert res.n_departed == 8_000


def test_two_barrier_worker_blocking():
    # 9 workers in groups of 4 leave one never schedulable
    cfg, wl = single_class(s=9, k=4, lam=0.3, mu=1.0, mode="two_barrier")
    res = run(cfg, wl, horizon_jobs=20_000, seed=3)
    assert res.max_busy_workers <= 8
    assert res.blocked_time > 0.0


def test_one_barrier_uses_all_workers():
    cfg, wl = single_class(s=9, k=4, lam=0.5, mu=1.0, mode="one_barrier")
    res = run(cfg, wl, horizon_jobs=20_000, seed=3)
    assert res.max_busy_workers == 9
    assert res.blocked_time == 0.0


def test_warmup_drops_leading_jobs():
    cfg, wl = single_class(s=2, k=2, lam=0.2, mu=1.0)
    full = run(cfg, wl, horizon_jobs=1_000, warmup=0, seed=5)
    cut = run(cfg, wl, horizon_jobs=1_000, warmup=100, seed=5)
    assert full.n_departed == cut.n_departed == 1_000
    np.testing.assert_allclose(
        cut.mean_sojourn, full.job_sojourn[100:].mean(), rtol=1e-12
    )


def test_default_warmup_is_ten_percent():
    cfg, wl = single_class(s=2, k=2, lam=0.2, mu=1.0)
    res = run(cfg, wl, horizon_jobs=1_000, seed=5)
    assert res.warmup_jobs == 100


def test_gaps_zero_without_overhead():
    cfg, wl = single_class(s=2, k=2, lam=0.6, mu=1.0)
    res = run(cfg, wl, horizon_jobs=5_000, seed=21)
    assert res.gaps.size > 0
    assert (res.gaps == 0.0).all()
    assert (idle_gap_trace(cfg, wl, horizon_jobs=2_000, seed=21) == 0.0).all()


def test_gate_gaps_bounded_by_polling_interval():
    ov = OverheadConfig(polling_interval=0.5, rate=1.0)
    cfg, wl = single_class(s=2, k=2, lam=0.6, mu=1.0, overhead=ov)
    gaps = idle_gap_trace(cfg, wl, horizon_jobs=5_000, seed=21)
    assert gaps.size > 0
    assert (gaps > 0.0).all()
    assert gaps.max() < 0.5


def test_per_task_injection_inflates_service_not_gaps():
    base_cfg, wl = single_class(s=4, k=2, lam=0.2, mu=1.0)
    ov_cfg = SystemConfig(s=4, overhead=OverheadConfig(1.0, 1.0, injection="per_task"))
    plain = run(base_cfg, wl, horizon_jobs=20_000, seed=2)
    inflated = run(ov_cfg, wl, horizon_jobs=20_000, seed=2)
    assert (inflated.gaps == 0.0).all()
    assert inflated.mean_server_time > plain.mean_server_time + 0.3


def test_straggler_server_accounting():
    cfg, wl = single_class(s=8, k=4, lam=0.2, mu=1.0, skl_l=2)
    res = run(cfg, wl, horizon_jobs=30_000, seed=13, keep_records=True)
    assert validate_result(res, cfg, wl) == []
    assert (res.job_preempted == 2).all()
    assert res.mean_server_time == pytest.approx(2.0, rel=0.02)
    assert res.mean_useful_time == pytest.approx(5.0 / 6.0, rel=0.02)


def test_run_saturated_counts_and_order():
    cfg, wl = single_class(s=6, k=3, lam=1.0, mu=1.0)
    res = run_saturated(cfg, wl, n_jobs=2_000, seed=19)
    assert res.n_departed == 2_000
    starts = res.job_waiting  # arrivals preloaded at time zero
    assert (np.diff(starts) >= 0).all()
    assert starts[0] == 0.0


def test_occupancy_states_live_in_feasible_window():
    cfg, wl = single_class(s=12, k=4, lam=1.0, mu=1.0, skl_l=3)
    res = run_saturated(cfg, wl, n_jobs=20_000, seed=23, track_occupancy=True)
    assert res.occupancy
    mass = sum(res.occupancy.values())
    assert mass == pytest.approx(1.0, abs=1e-9)
    for state in res.occupancy:
        assert len(state) == 3
        t_busy = sum(r * c for r, c in zip((2, 3, 4), state))
        assert 9 <= t_busy <= 12


def test_summary_keys():
    cfg, wl = single_class(s=2, k=2, lam=0.3, mu=1.0)
    res = run(cfg, wl, horizon_jobs=500, seed=1)
    smry = res.summary()
    for key in ("mean_waiting", "mean_sojourn", "n_departed", "busy_fraction", "seed"):
        assert key in smry


def test_estimator_brackets_known_capacity():
    cfg, wl = single_class(s=4, k=4, lam=1.0, mu=1.0, mode="two_barrier")
    est = estimate_max_stable_utilization(cfg, wl, seed=11)
    assert est.lo <= 0.50 and est.hi >= 0.46
    assert abs(est.value - 0.48) < 0.03
    assert not est.inconclusive


def test_estimator_slow_path_agrees_with_fast_path():
    cfg, wl = single_class(s=4, k=2, lam=1.0, mu=1.0)
    fast = estimate_max_stable_utilization(cfg, wl, seed=11)
    slow = estimate_max_stable_utilization(
        cfg, wl, seed=11, use_fast_path=False, probe_jobs=60_000
    )
    assert abs(fast.value - slow.value) < 0.05
