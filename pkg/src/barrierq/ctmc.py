"""Saturated-system Markov chain for one-barrier (s, k, l) straggler service.

State of the backlogged system: the count vector (c_{k-l+1}, ..., c_k)
where c_r is the number of in-flight jobs with r tasks still running (a job
departs at its l-th task finish, so r never drops below k-l+1).  The total
running-task count T(S) = sum_r r*c_r stays in [s-k+1, s]: a start happens
the moment k workers are free, so at most k-1 can idle while backlogged.

Transitions out of S, for each bucket r with c_r > 0 (task-finish rate
c_r * r * mu; the per-job convention c_r * mu is kept behind a flag):

- r > k-l+1, T > s-k+1: a task finishes, the job moves to bucket r-1.
- r > k-l+1, T = s-k+1: same finish frees the k-th idle worker, so one
  queued job starts: additionally c_k += 1.
- r = k-l+1, T > s-l+1: the job's l-th task finishes; it departs and the
  k-l killed tasks free their workers, still fewer than k idle.
- r = k-l+1, T <= s-l+1: the departure frees at least k workers, so one
  queued job starts: c_r -= 1, c_k += 1.

Each transition starts at most one job: a start consumes k idle workers
and a single finish or departure frees at most k of them (l >= 1).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .stability import harmonic

STATE_CAP = 2_000_000


def seed_state(s: int, k: int, l: int) -> tuple[int, ...]:
    """Backlogged start-up state: floor(s/k) fresh jobs, all tasks running."""
    assert 1 <= l <= k <= s
    c = [0] * l
    c[l - 1] = s // k
    return tuple(c)


def transitions(
    state: tuple[int, ...], s: int, k: int, l: int, mu: float, per_job_rates: bool = False
) -> list[tuple[tuple[int, ...], float, bool]]:
    """(next_state, rate, job_started) triples for one state."""
    lo = k - l + 1
    t_total = sum((lo + i) * c for i, c in enumerate(state))
    assert s - k + 1 <= t_total <= s, state
    out = []
    for i, c in enumerate(state):
        if c == 0:
            continue
        r = lo + i
        rate = c * mu if per_job_rates else c * r * mu
        nxt = list(state)
        if r > lo:
            nxt[i] -= 1
            nxt[i - 1] += 1
            started = t_total == s - k + 1
            if started:
                nxt[l - 1] += 1
        else:
            nxt[i] -= 1
            started = t_total <= s - l + 1
            if started:
                nxt[l - 1] += 1
        new_total = sum((lo + j) * cc for j, cc in enumerate(nxt))
        # a single start never leaves k workers idle again
        assert s - new_total < k
        assert s - k + 1 <= new_total <= s
        out.append((tuple(nxt), rate, started))
    return out


def enumerate_states(s: int, k: int, l: int) -> tuple[list[tuple[int, ...]], dict]:
    """Breadth-first closure of the transition relation from the seed state.

    Feasible-looking count vectors that the dynamics never reach (the seed
    is the unique entry point of the saturated system) are excluded.
    """
    seed = seed_state(s, k, l)
    index = {seed: 0}
    states = [seed]
    work = deque([seed])
    while work:
        st = work.popleft()
        for nxt, _, _ in transitions(st, s, k, l, 1.0):
            if nxt not in index:
                assert len(states) < STATE_CAP, "state space exceeds cap"
                index[nxt] = len(states)
                states.append(nxt)
                work.append(nxt)
    return states, index


def build_generator(
    s: int, k: int, l: int, mu: float = 1.0, per_job_rates: bool = False
):
    """Returns (states, index, Q, start_rate): Q is the CSR generator with
    rows summing to zero, start_rate[i] the total rate of job-starting
    transitions out of state i (self-loops included, as when l = 1)."""
    states, index = enumerate_states(s, k, l)
    n = len(states)
    rows, cols, vals = [], [], []
    diag = np.zeros(n)
    start_rate = np.zeros(n)
    for i, st in enumerate(states):
        for nxt, rate, started in transitions(st, s, k, l, mu, per_job_rates):
            j = index[nxt]
            if started:
                start_rate[i] += rate
            if j == i:
                continue  # self-loop cancels in the generator
            rows.append(i)
            cols.append(j)
            vals.append(rate)
            diag[i] -= rate
    rows.extend(range(n))
    cols.extend(range(n))
    vals.extend(diag)
    q = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return states, index, q, start_rate


def solve_steady_state(
    q: sp.csr_matrix, method: str = "direct", tol: float = 1e-12, max_iter: int = 2_000_000
) -> np.ndarray:
    """Stationary distribution pi with pi Q = 0, sum pi = 1.

    direct: sparse LU on Q^T with one equation replaced by normalization.
    power: uniformized power iteration (cross-check path).
    Both verify the residual ||pi Q||_inf < 1e-10.
    """
    n = q.shape[0]
    if n == 1:
        return np.ones(1)
    if method == "direct":
        a = sp.csc_matrix(q.T, copy=True)
        a = a.tolil()
        a[n - 1, :] = 1.0
        b = np.zeros(n)
        b[n - 1] = 1.0
        pi = spla.spsolve(a.tocsc(), b)
    elif method == "power":
        rates = -q.diagonal()
        lam = 1.05 * rates.max()
        p = sp.eye(n, format="csr") + q / lam
        pi = np.full(n, 1.0 / n)
        for _ in range(max_iter):
            nxt = pi @ p
            delta = np.abs(nxt - pi).max()
            pi = nxt
            if delta < tol:
                break
        pi = pi / pi.sum()
    else:
        raise ValueError(f"unknown method {method!r}")
    assert pi.min() > -1e-9
    pi = np.clip(pi, 0.0, None)
    pi = pi / pi.sum()
    resid = np.abs(pi @ q).max()
    assert resid < 1e-10, f"stationary residual {resid:.3e}"
    return pi


@dataclass(frozen=True)
class SklCtmcResult:
    s: int
    k: int
    l: int
    mu: float
    n_states: int
    throughput: float
    rho_total: float
    rho_useful: float


def max_utilization_1barrier_skl(
    s: int,
    k: int,
    l: int,
    mu: float = 1.0,
    per_job_rates: bool = False,
    method: str = "direct",
) -> SklCtmcResult:
    """Saturation job throughput and the utilization it implies.

    rho_total counts all consumed server time (l/mu per job), rho_useful
    only completed tasks' time; both relative to all s workers.
    """
    states, index, q, start_rate = build_generator(s, k, l, mu, per_job_rates)
    pi = solve_steady_state(q, method=method)
    assert pi[index[seed_state(s, k, l)]] > 0.0
    thr = float(pi @ start_rate)
    h = harmonic(k) - harmonic(k - l)
    total = l / mu
    useful = (l - (k - l) * h) / mu
    return SklCtmcResult(
        s=s,
        k=k,
        l=l,
        mu=mu,
        n_states=len(states),
        throughput=thr,
        rho_total=thr * total / s,
        rho_useful=thr * useful / s,
    )


def stationary_occupancy(
    s: int, k: int, l: int, mu: float = 1.0, per_job_rates: bool = False
) -> dict[tuple[int, ...], float]:
    """Stationary probability per state, keyed by count vector."""
    states, index, q, _ = build_generator(s, k, l, mu, per_job_rates)
    pi = solve_steady_state(q)
    return {st: float(p) for st, p in zip(states, pi)}
