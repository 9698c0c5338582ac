"""Moment-generating-function tail bounds: hand-computed MGF values,
exact Markov-chain comparisons, and quadrature cross-checks."""
import math

import numpy as np
import pytest

from barrierq import bounds
from barrierq.bounds import (
    ServiceProcessSpec,
    mgf_Omega,
    mgf_Q,
    rho_A,
    sojourn_cdf,
    sojourn_cdf_fixed_k,
    sojourn_quantile,
    waiting_quantile,
    _sojourn_cdf_quad,
)


def test_service_spec_constructors():
    fixed = ServiceProcessSpec.fixed(8, 1.0, 4, bem=True)
    assert fixed.k_max == 4
    assert fixed.theta_sup == 5.0
    assert fixed.all_bem
    hybrid = ServiceProcessSpec.hybrid(8, 1.0, 4, p_bem=0.25)
    assert not hybrid.all_bem
    assert sum(c.prob for c in hybrid.components) == pytest.approx(1.0)
    rand = ServiceProcessSpec.random_k(8, 1.0, {2: 0.5, 6: 0.5})
    assert rand.k_max == 6
    assert rand.theta_sup == 3.0


def test_mgf_q_hand_values():
    one = ServiceProcessSpec.fixed(1, 1.0, 1)
    assert mgf_Q(0.5, one) == pytest.approx(2.0, rel=1e-12)
    two = ServiceProcessSpec.fixed(4, 1.0, 2)
    assert mgf_Q(0.5, two) == pytest.approx(8.0 / 3.0, rel=1e-12)
    mix = ServiceProcessSpec.random_k(4, 1.0, {1: 0.5, 2: 0.5})
    assert mgf_Q(0.5, mix) == pytest.approx(7.0 / 3.0, rel=1e-12)


def test_mgf_omega_hand_values():
    bem = ServiceProcessSpec.fixed(4, 1.0, 2, bem=True)
    assert mgf_Omega(0.5, bem) == pytest.approx(48.0 / 35.0, rel=1e-12)
    plain = ServiceProcessSpec.fixed(4, 1.0, 2, bem=False)
    assert mgf_Omega(1.0, plain) == pytest.approx((4.0 / 3.0) ** 2, rel=1e-12)
    mixed = ServiceProcessSpec.hybrid(4, 1.0, 2, p_bem=0.5)
    expect = 0.5 * 48.0 / 35.0 + 0.5 * (8.0 / 7.0) ** 2
    assert mgf_Omega(0.5, mixed) == pytest.approx(expect, rel=1e-12)


def test_mean_service_increment():
    bem = ServiceProcessSpec.fixed(8, 2.0, 3, bem=True)
    expect = (1 / 6 + 1 / 7 + 1 / 8) / 2.0
    assert bem.mean_omega() == pytest.approx(expect, rel=1e-12)
    plain = ServiceProcessSpec.fixed(8, 2.0, 3, bem=False)
    assert plain.mean_omega() == pytest.approx(3 / 16, rel=1e-12)


def test_envelope_single_server_has_no_burst_term():
    spec = ServiceProcessSpec.fixed(1, 1.0, 1)
    env = bounds.envelope(0.4, 0.5, spec)
    assert env.sigma_S == pytest.approx(0.0, abs=1e-12)
    assert env.rho_S == pytest.approx(math.log(1.0 / 0.6) / 0.4, rel=1e-12)


def test_arrival_envelope_rate_decreases_in_theta():
    vals = [rho_A(0.5, th) for th in (0.01, 0.1, 1.0, 10.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[0] < 1.0 / 0.5
    assert vals[0] == pytest.approx(2.0, rel=0.01)


def test_single_server_decay_rate_is_spare_capacity():
    spec = ServiceProcessSpec.fixed(1, 1.0, 1)
    b = waiting_quantile(0.01, 0.5, spec, variant="gi")
    assert b.stable
    assert b.theta == pytest.approx(0.5, abs=1e-6)
    assert b.tau == pytest.approx(-math.log(0.01) / 0.5, rel=1e-5)
    assert b.alpha == 1.0


def test_waiting_bound_dominates_exact_single_server_tail():
    lam, mu = 0.5, 1.0
    spec = ServiceProcessSpec.fixed(1, mu, 1)
    b = waiting_quantile(0.01, lam, spec)
    for q in (0.5, 0.9, 0.99, 0.999):
        exact = max(0.0, math.log((1 - q) / lam) / (lam - mu))
        bound = waiting_quantile(1 - q, lam, spec).tau
        assert bound >= exact - 1e-9


def test_unstable_load_is_flagged():
    spec = ServiceProcessSpec.fixed(4, 1.0, 4, bem=True)
    lam_crit = 1.0 / spec.mean_omega()
    stable = waiting_quantile(0.01, lam_crit - 1e-4, spec)
    unstable = waiting_quantile(0.01, lam_crit + 1e-4, spec)
    assert stable.stable
    assert not unstable.stable
    assert math.isinf(unstable.tau)


def test_g_variant_bound_is_self_consistent():
    spec = ServiceProcessSpec.fixed(8, 1.0, 4, bem=True)
    g = waiting_quantile(0.01, 0.5, spec, variant="g")
    assert g.stable and g.alpha > 1.0
    assert g.alpha * math.exp(-g.theta * g.tau) <= 0.01 + 1e-12


def test_gi_and_g_are_both_valid_so_neither_dominates_wildly():
    spec = ServiceProcessSpec.fixed(8, 1.0, 4, bem=True)
    gi = waiting_quantile(0.001, 0.5, spec, variant="gi")
    g = waiting_quantile(0.001, 0.5, spec, variant="g")
    assert 0 < g.tau < 10 * gi.tau
    assert 0 < gi.tau < 10 * g.tau


@pytest.mark.parametrize("k", [1, 2, 3, 8, 16])
def test_sojourn_cdf_closed_form_matches_quadrature(k):
    rng = np.random.default_rng(k)
    for _ in range(10):
        mu = rng.uniform(0.5, 3.0)
        theta = rng.uniform(0.05, 0.95) * mu * 0.99
        tau = rng.uniform(0.1, 20.0)
        alpha = rng.choice([1.0, 1.0 + rng.uniform(0.0, 3.0)])
        cf = sojourn_cdf_fixed_k(tau, theta, k, mu, alpha)
        qd = _sojourn_cdf_quad(tau, theta, k, mu, alpha)
        assert cf == pytest.approx(qd, abs=1e-8)


def test_sojourn_cdf_monotone_in_tau_and_k():
    spec4 = ServiceProcessSpec.fixed(8, 1.0, 4)
    taus = np.linspace(0.5, 30, 40)
    vals = [sojourn_cdf(t, 0.3, spec4, 1.0) for t in taus]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
    assert all(0.0 <= v <= 1.0 for v in vals)
    spec8 = ServiceProcessSpec.fixed(8, 1.0, 8)
    for t in (2.0, 5.0, 10.0):
        assert sojourn_cdf(t, 0.3, spec8, 1.0) <= sojourn_cdf(t, 0.3, spec4, 1.0)


def test_sojourn_cdf_mixture_is_component_average():
    mix = ServiceProcessSpec.random_k(8, 1.0, {2: 0.25, 4: 0.75})
    for t in (1.0, 4.0, 9.0):
        direct = 0.25 * sojourn_cdf_fixed_k(t, 0.3, 2, 1.0, 1.0) + (
            0.75 * sojourn_cdf_fixed_k(t, 0.3, 4, 1.0, 1.0)
        )
        assert sojourn_cdf(t, 0.3, mix, 1.0) == pytest.approx(direct, rel=1e-10)


def test_larger_alpha_weakens_the_sojourn_bound():
    assert sojourn_cdf_fixed_k(5.0, 0.3, 4, 1.0, 2.0) <= sojourn_cdf_fixed_k(
        5.0, 0.3, 4, 1.0, 1.0
    )


def test_sojourn_bound_dominates_exact_single_server():
    # sojourn in an M/M/1 queue is exponential with the spare capacity rate
    lam, mu = 0.5, 1.0
    spec = ServiceProcessSpec.fixed(1, mu, 1)
    b = sojourn_quantile(0.01, lam, spec, variant="gi")
    assert b.stable
    exact = -math.log(0.01) / (mu - lam)
    assert b.tau >= exact - 1e-6
    assert b.tau < 3 * exact
    theta = b.theta
    for tau in (1.0, 5.0, 10.0, 20.0):
        bound_cdf = sojourn_cdf(tau, theta, spec, b.alpha)
        exact_cdf = 1.0 - math.exp(-(mu - lam) * tau)
        assert bound_cdf <= exact_cdf + 1e-9


def test_sojourn_quantile_exceeds_pure_service_quantile():
    # even an empty system keeps a job for the slowest of its k tasks
    spec = ServiceProcessSpec.fixed(8, 1.0, 4)
    b = sojourn_quantile(0.01, 0.3, spec)
    assert b.stable
    service_only = -math.log(1.0 - (1.0 - 0.01) ** 0.25)
    assert b.tau >= service_only


def test_sojourn_bound_covers_hybrid_mixes():
    # the service-residual term is the same pessimistic max-of-k for loose
    # jobs, so only the waiting envelope reacts to the barrier fraction
    loose = ServiceProcessSpec.hybrid(8, 1.0, 4, p_bem=0.0)
    strict = ServiceProcessSpec.hybrid(8, 1.0, 4, p_bem=1.0)
    b_loose = sojourn_quantile(0.01, 0.5, loose)
    b_strict = sojourn_quantile(0.01, 0.5, strict)
    assert b_loose.stable and b_strict.stable
    assert b_loose.tau <= b_strict.tau + 1e-9
    for t in (2.0, 6.0):
        assert sojourn_cdf(t, 0.3, loose, 1.0) == pytest.approx(
            sojourn_cdf(t, 0.3, strict, 1.0), rel=1e-12
        )


def test_high_order_cdf_goes_through_quadrature_fallback():
    before = bounds.QUAD_FALLBACKS
    sojourn_cdf_fixed_k(10.0, 0.2, bounds.QUAD_FALLBACK_K + 5, 1.0, 1.0)
    assert bounds.QUAD_FALLBACKS == before + 1
