"""Compiled fast paths for the heavy simulation sweeps.

These kernels cover the single-class, fixed-k, exponential, no-overhead
configurations that dominate stability estimation and bound validation.
They implement the same scheduling contract as engine.run (see the tests
that cross-check the two); inputs are pre-drawn arrays so reproducibility
stays with the numpy streams.

Falls back to plain Python when numba is unavailable (slow but identical).
"""
from __future__ import annotations

import numpy as np

from . import rng as rngmod
from .rng import RngStream

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


@njit(cache=True)
def _heap_push(h, n, x):
    h[n] = x
    i = n
    while i > 0:
        p = (i - 1) >> 1
        if h[p] <= h[i]:
            break
        h[p], h[i] = h[i], h[p]
        i = p
    return n + 1


@njit(cache=True)
def _heap_pop(h, n):
    top = h[0]
    n -= 1
    h[0] = h[n]
    i = 0
    while True:
        l = 2 * i + 1
        if l >= n:
            break
        m = l
        r = l + 1
        if r < n and h[r] < h[l]:
            m = r
        if h[i] <= h[m]:
            break
        h[i], h[m] = h[m], h[i]
        i = m
    return top, n


@njit(cache=True)
def _heap2_push(ht, hj, n, t, j):
    ht[n] = t
    hj[n] = j
    i = n
    while i > 0:
        p = (i - 1) >> 1
        if ht[p] <= ht[i]:
            break
        ht[p], ht[i] = ht[i], ht[p]
        hj[p], hj[i] = hj[i], hj[p]
        i = p
    return n + 1


@njit(cache=True)
def _heap2_pop(ht, hj, n):
    t = ht[0]
    j = hj[0]
    n -= 1
    ht[0] = ht[n]
    hj[0] = hj[n]
    i = 0
    while True:
        l = 2 * i + 1
        if l >= n:
            break
        m = l
        r = l + 1
        if r < n and ht[r] < ht[l]:
            m = r
        if ht[i] <= ht[m]:
            break
        ht[i], ht[m] = ht[m], ht[i]
        hj[i], hj[m] = hj[m], hj[i]
        i = m
    return t, j, n


@njit(cache=True)
def _one_barrier_kernel(arrivals, svc, k, s):
    """Single-class barrier jobs, one-barrier release.  svc is row-major
    (n, k) task durations.  Returns (start_time, queue_len_at_arrival)."""
    n = arrivals.shape[0]
    start = np.empty(n, np.float64)
    qlen = np.empty(n, np.int64)
    heap = np.empty(s + 1, np.float64)
    hn = 0
    idle = s
    queue = np.empty(n, np.int64)
    qhead = 0
    qtail = 0
    next_arr = 0
    started = 0
    inf = np.inf
    while started < n:
        ta = arrivals[next_arr] if next_arr < n else inf
        tf = heap[0] if hn > 0 else inf
        if ta <= tf:
            now = ta
            queue[qtail] = next_arr
            qtail += 1
            next_arr += 1
            while qtail > qhead and idle >= k:
                j = queue[qhead]
                qhead += 1
                start[j] = now
                started += 1
                idle -= k
                base = j * k
                for i in range(k):
                    hn = _heap_push(heap, hn, now + svc[base + i])
            qlen[next_arr - 1] = qtail - qhead
        else:
            now, hn = _heap_pop(heap, hn)
            idle += 1
            while qtail > qhead and idle >= k:
                j = queue[qhead]
                qhead += 1
                start[j] = now
                started += 1
                idle -= k
                base = j * k
                for i in range(k):
                    hn = _heap_push(heap, hn, now + svc[base + i])
    return start, qlen


@njit(cache=True)
def _two_barrier_kernel(arrivals, svc_job, m):
    """Single-class barrier jobs with departure barrier.  Workers act as
    m = floor(s/k) groups, each held for its job's slowest task (svc_job).
    Returns (start_time, queue_len_at_arrival)."""
    n = arrivals.shape[0]
    start = np.empty(n, np.float64)
    qlen = np.empty(n, np.int64)
    heap = np.empty(m + 1, np.float64)
    hn = 0
    queue = np.empty(n, np.int64)
    qhead = 0
    qtail = 0
    next_arr = 0
    started = 0
    inf = np.inf
    while started < n:
        ta = arrivals[next_arr] if next_arr < n else inf
        tf = heap[0] if hn > 0 else inf
        if ta <= tf:
            now = ta
            queue[qtail] = next_arr
            qtail += 1
            next_arr += 1
            while qtail > qhead and hn < m:
                j = queue[qhead]
                qhead += 1
                start[j] = now
                started += 1
                hn = _heap_push(heap, hn, now + svc_job[j])
            qlen[next_arr - 1] = qtail - qhead
        else:
            now, hn = _heap_pop(heap, hn)
            while qtail > qhead and hn < m:
                j = queue[qhead]
                qhead += 1
                start[j] = now
                started += 1
                hn = _heap_push(heap, hn, now + svc_job[j])
    return start, qlen


@njit(cache=True)
def _saturated_skl_kernel(svc, s, k, l, n_jobs):
    """Perpetually backlogged one-barrier run under a (k, l) straggler
    policy; jobs depart at the l-th task finish, killed tasks free their
    workers at that instant.  Returns job start times."""
    start = np.empty(n_jobs, np.float64)
    cap = n_jobs * k + 1
    ht = np.empty(cap, np.float64)
    hj = np.empty(cap, np.int64)
    hn = 0
    completed = np.zeros(n_jobs, np.int32)
    departed = np.zeros(n_jobs, np.uint8)
    idle = s
    started = 0
    now = 0.0
    while idle >= k and started < n_jobs:
        start[started] = now
        base = started * k
        for i in range(k):
            hn = _heap2_push(ht, hj, hn, now + svc[base + i], started)
        idle -= k
        started += 1
    while started < n_jobs and hn > 0:
        t, j, hn = _heap2_pop(ht, hj, hn)
        if departed[j] == 1:
            continue
        now = t
        completed[j] += 1
        if completed[j] == l:
            departed[j] = 1
            idle += 1 + (k - l)
        else:
            idle += 1
        while idle >= k and started < n_jobs:
            start[started] = now
            base = started * k
            for i in range(k):
                hn = _heap2_push(ht, hj, hn, now + svc[base + i], started)
            idle -= k
            started += 1
    return start


def draw_inputs(n_jobs: int, k: int, lam: float, mu: float, rng: RngStream):
    """Arrival instants and task durations for the kernels, drawn from the
    same named streams the event engine uses."""
    arr = rng.child(rngmod.ARRIVALS).generator.standard_exponential(n_jobs)
    arr /= lam
    np.cumsum(arr, out=arr)
    svc = rng.child(rngmod.SERVICE).generator.standard_exponential(n_jobs * k)
    svc /= mu
    return arr, svc


def one_barrier_run(n_jobs: int, s: int, k: int, lam: float, mu: float, rng: RngStream):
    """Returns (waiting, sojourn, queue_len_at_arrival) arrays."""
    assert 1 <= k <= s
    arr, svc = draw_inputs(n_jobs, k, lam, mu, rng)
    start, qlen = _one_barrier_kernel(arr, svc, k, s)
    waiting = start - arr
    sojourn = waiting + svc.reshape(n_jobs, k).max(axis=1)
    return waiting, sojourn, qlen


def two_barrier_run(n_jobs: int, s: int, k: int, lam: float, mu: float, rng: RngStream):
    """Returns (waiting, sojourn, queue_len_at_arrival) arrays."""
    assert 1 <= k <= s
    arr, svc = draw_inputs(n_jobs, k, lam, mu, rng)
    svc_job = svc.reshape(n_jobs, k).max(axis=1)
    start, qlen = _two_barrier_kernel(arr, svc_job, s // k)
    waiting = start - arr
    sojourn = waiting + svc_job
    return waiting, sojourn, qlen


def saturated_skl_throughput(
    n_jobs: int, s: int, k: int, l: int, mu: float, rng: RngStream, warm_frac: float = 0.1
) -> float:
    """Long-run job start rate of a perpetually backlogged (s, k, l) run."""
    assert 1 <= l <= k <= s
    svc = rng.child(rngmod.SERVICE).generator.standard_exponential(n_jobs * k)
    svc /= mu
    start = _saturated_skl_kernel(svc, s, k, l, n_jobs)
    w = int(warm_frac * n_jobs)
    assert n_jobs - w >= 2
    span = start[-1] - start[w]
    assert span > 0.0
    return (n_jobs - 1 - w) / span


def warm_compile() -> None:
    """Trigger JIT compilation of all kernels on tiny inputs."""
    r = RngStream(0)
    one_barrier_run(4, 2, 1, 1.0, 1.0, r.child(1))
    two_barrier_run(4, 2, 2, 0.2, 1.0, r.child(2))
    saturated_skl_throughput(8, 4, 2, 1, 1.0, r.child(3), warm_frac=0.25)
