"""Workload and system configuration behaviour."""
import pytest

from barrierq.model import (
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
from barrierq.rng import RngStream


def test_barrier_mode_coerced_from_string():
    cfg = SystemConfig(s=4, mode="two_barrier")
    assert cfg.mode is BarrierMode.TWO


def test_exponential_moments_and_sampling():
    svc = Exponential(2.0)
    assert svc.mean() == 0.5
    draws = svc.sample(RngStream(3).child(2), 100_000)
    assert draws.mean() == pytest.approx(0.5, rel=0.02)


def test_hyperexponential_mean():
    svc = HyperExponential(probs=(0.3, 0.7), rates=(1.0, 4.0))
    assert svc.mean() == pytest.approx(0.3 / 1.0 + 0.7 / 4.0, rel=1e-12)
    draws = svc.sample(RngStream(3).child(2), 200_000)
    assert draws.mean() == pytest.approx(svc.mean(), rel=0.02)


def test_deterministic_service():
    svc = Deterministic(1.5)
    assert svc.mean() == 1.5
    assert (svc.sample(RngStream(0).child(2), 10) == 1.5).all()


def test_job_class_fixed_k():
    c = JobClass(weight=1.0, barrier=True, k=4, service=Exponential(1.0))
    assert c.fixed_k == 4
    assert c.k_max() == 4
    assert c.mean_k() == 4.0
    assert c.k_pmf() == {4: 1.0}


def test_job_class_random_k():
    c = JobClass(weight=1.0, barrier=True, k={2: 0.5, 8: 0.5}, service=Exponential(1.0))
    assert c.fixed_k is None
    assert c.k_max() == 8
    assert c.mean_k() == 5.0
    assert sorted(c.k_support()) == [2, 8]


def test_class_probs_normalize_weights():
    wl = WorkloadSpec(
        arrivals=PoissonArrivals(1.0),
        classes=(
            JobClass(weight=3.0, barrier=True, k=2, service=Exponential(1.0)),
            JobClass(weight=1.0, barrier=False, k=2, service=Exponential(1.0)),
        ),
    )
    assert wl.class_probs() == pytest.approx([0.75, 0.25])


def test_validate_rejects_oversized_k():
    cfg = SystemConfig(s=2)
    wl = WorkloadSpec(
        arrivals=PoissonArrivals(1.0),
        classes=(JobClass(weight=1.0, barrier=True, k=4, service=Exponential(1.0)),),
    )
    errs = validate(cfg, wl)
    assert len(errs) == 1 and "exceeds" in errs[0]


def test_validate_rejects_nonbarrier_classes_under_two_barriers():
    cfg = SystemConfig(s=4, mode=BarrierMode.TWO)
    wl = WorkloadSpec(
        arrivals=PoissonArrivals(1.0),
        classes=(JobClass(weight=1.0, barrier=False, k=2, service=Exponential(1.0)),),
    )
    assert validate(cfg, wl)


def test_validate_straggler_policy_constraints():
    base = dict(weight=1.0, barrier=True, service=Exponential(1.0))
    wl_fixed = WorkloadSpec(
        arrivals=PoissonArrivals(1.0), classes=(JobClass(k=4, **base),)
    )
    assert validate(SystemConfig(s=8, skl_l=2), wl_fixed) == []
    assert validate(SystemConfig(s=8, skl_l=5), wl_fixed)  # l > k
    wl_two = WorkloadSpec(
        arrivals=PoissonArrivals(1.0),
        classes=(JobClass(k=4, **base), JobClass(k=2, **base)),
    )
    assert validate(SystemConfig(s=8, skl_l=2), wl_two)  # multi-class
    wl_random = WorkloadSpec(
        arrivals=PoissonArrivals(1.0), classes=(JobClass(k={2: 0.5, 4: 0.5}, **base),)
    )
    assert validate(SystemConfig(s=8, skl_l=2), wl_random)  # random k


def test_validate_collects_multiple_errors():
    cfg = SystemConfig(s=2, mode=BarrierMode.TWO, skl_l=9)
    wl = WorkloadSpec(
        arrivals=PoissonArrivals(1.0),
        classes=(
            JobClass(weight=1.0, barrier=False, k=4, service=Exponential(1.0)),
            JobClass(weight=1.0, barrier=True, k=2, service=Exponential(1.0)),
        ),
    )
    assert len(validate(cfg, wl)) >= 3


def test_utilization_single_class():
    cfg, wl = single_class(s=8, k=4, lam=0.3, mu=2.0)
    assert utilization(cfg, wl) == pytest.approx(0.3 * 4 * 0.5 / 8, rel=1e-12)


def test_utilization_straggler_uses_departure_rule_demand():
    cfg, wl = single_class(s=8, k=4, lam=0.3, mu=2.0, skl_l=2)
    assert utilization(cfg, wl) == pytest.approx(0.3 * (2 / 2.0) / 8, rel=1e-12)


def test_utilization_mixture():
    wl = WorkloadSpec(
        arrivals=PoissonArrivals(0.5),
        classes=(
            JobClass(weight=1.0, barrier=True, k=4, service=Exponential(1.0)),
            JobClass(weight=1.0, barrier=False, k=2, service=Exponential(2.0)),
        ),
    )
    cfg = SystemConfig(s=8)
    expect = 0.5 * (0.5 * 4 * 1.0 + 0.5 * 2 * 0.5) / 8
    assert utilization(cfg, wl) == pytest.approx(expect, rel=1e-12)


def test_single_class_raises_on_invalid():
    with pytest.raises(ValueError):
        single_class(s=2, k=4, lam=1.0, mu=1.0)


def test_overhead_config_defaults():
    ov = OverheadConfig()
    assert ov.polling_interval == 1.0
    assert ov.rate is None
    assert ov.injection == "queue_gate"
