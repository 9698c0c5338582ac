"""Closed-form stability limits for barrier-mode parallel service.

All formulas assume iid Exp(mu) task durations.  Throughput limits follow
from the mean of exponential order statistics: the j-th smallest of m iid
Exp(mu) draws has mean (H_m - H_{m-j}) / mu, where H_n is the n-th harmonic
number.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction


def harmonic(n: int) -> float:
    """H_n = sum_{j=1..n} 1/j, with H_0 = 0.  Summed smallest term first so
    float error stays at a few ulp even for large n."""
    assert n >= 0 and n == int(n)
    acc = 0.0
    for j in range(n, 0, -1):
        acc += 1.0 / j
    return acc


def harmonic2(n: int) -> float:
    """Second-order harmonic number: sum_{j=1..n} 1/j^2."""
    assert n >= 0
    acc = 0.0
    for j in range(n, 0, -1):
        acc += 1.0 / (j * j)
    return acc


def order_stat_mean(m: int, j: int, mu: float = 1.0) -> float:
    """Mean of the j-th smallest of m iid Exp(mu) variables."""
    assert 1 <= j <= m
    assert mu > 0.0
    return (harmonic(m) - harmonic(m - j)) / mu


def max_util_2barrier(k: int) -> float:
    """Maximum utilization with two barriers and parallelism k: 1 / H_k.

    Holds for every worker count s with k | s; each group of k workers is
    held for the slowest of its k tasks, so the fraction of held time spent
    serving is E[task] / E[max of k] = 1 / H_k.

    The reciprocal is formed on the exact rational H_k and rounded once,
    so values like 1 / H_4 = 12/25 come out bit-exact.  H_k's denominator
    grows exponentially, so very large k falls back to float arithmetic.
    """
    assert k >= 1
    if k > 1024:
        return 1.0 / harmonic(k)
    return float(1 / sum(Fraction(1, j) for j in range(1, k + 1)))


def max_util_1barrier(s: int, k: int) -> float:
    """Maximum utilization with one barrier on s workers, parallelism k:
    k / (s * (H_s - H_{s-k})).

    At saturation every start waits for k workers to free among s busy
    ones, which takes the k-th order statistic of s exponential residuals.
    """
    assert 1 <= k <= s
    return k / (s * (harmonic(s) - harmonic(s - k)))


@dataclass(frozen=True)
class SklStability:
    """Two-barrier stability summary under a (k, l) straggler policy."""

    lam_max: float
    rho_skl: float
    rho_useful: float
    groups: int
    idle_workers: int


def skl_2barrier(s: int, k: int, l: int, mu: float = 1.0) -> SklStability:
    """Two-barrier limits when jobs depart at the l-th of k task finishes.

    With m = floor(s/k) worker groups the start rate is capped at
    m * mu / (H_k - H_{k-l}).  rho_skl counts all server time consumed
    (killed tasks included), rho_useful only the l completed tasks' share;
    both are fractions of the m*k schedulable workers, and s mod k workers
    sit permanently idle when k does not divide s.
    """
    assert 1 <= l <= k <= s
    assert mu > 0.0
    h = harmonic(k) - harmonic(k - l)
    m = s // k
    lam_max = m * mu / h
    rho_skl = l / (k * h)
    rho_useful = rho_skl - (k - l) / k
    return SklStability(
        lam_max=lam_max,
        rho_skl=rho_skl,
        rho_useful=rho_useful,
        groups=m,
        idle_workers=s - m * k,
    )


def skl_task_throughput(s: int, k: int, l: int) -> float:
    """Completed-task throughput per worker at saturation under the
    two-barrier (k, l) policy: l / (k * (H_k - H_{k-l}))."""
    assert 1 <= l <= k <= s
    return l / (k * (harmonic(k) - harmonic(k - l)))


def expected_job_server_time(k: int, l: int, mu: float = 1.0) -> tuple[float, float]:
    """(total, useful) mean server time consumed by one (k, l) job.

    Total is l/mu: the k - l killed tasks each burn the age of the l-th
    order statistic, the completed ones their full durations, and the two
    contributions rearrange to l task means.  Useful drops the killed share:
    (l - (k - l) * (H_k - H_{k-l})) / mu.
    """
    assert 1 <= l <= k
    assert mu > 0.0
    h = harmonic(k) - harmonic(k - l)
    total = l / mu
    useful = (l - (k - l) * h) / mu
    return total, useful


def mean_start_overhead(s: int, k: int, mu: float) -> float:
    """Mean service increment Omega(n) seen by the one-barrier start
    recurrence: the k-th order statistic of s exponential residuals,
    (H_s - H_{s-k}) / mu."""
    assert 1 <= k <= s
    return (harmonic(s) - harmonic(s - k)) / mu


def useful_fraction(k: int, l: int) -> float:
    """Fraction of consumed server time that belongs to completed tasks."""
    total, useful = expected_job_server_time(k, l)
    return useful / total
