"""Worker-revival overhead model.

A worker that went idle is revived by whichever comes first: a periodic
poll, uniform on (0, P) relative to the revival request, or the next
system event, exponential with rate lam.  The revival delay is therefore
Y = min(X_timer, X_event) with X_timer ~ U(0, P) and X_event ~ Exp(lam):

    P[Y > y] = (1 - y/P) * exp(-lam * y)    for 0 <= y <= P, else 0
    f_Y(y)   = exp(-lam * y) * (1/P + lam * (1 - y/P))

Times are in seconds; the default polling interval P is 1.0 s.
"""
from __future__ import annotations

import math

import numpy as np

from .rng import RngStream

DEFAULT_POLLING_INTERVAL = 1.0


def overhead_ccdf(y, polling_interval: float = DEFAULT_POLLING_INTERVAL, rate: float = 0.0):
    """P[Y > y].  Accepts scalars or arrays; rate 0 drops the event term."""
    assert polling_interval > 0.0
    assert rate >= 0.0
    y = np.asarray(y, dtype=float)
    inside = (y >= 0.0) & (y < polling_interval)
    vals = np.where(
        inside,
        (1.0 - np.minimum(y, polling_interval) / polling_interval)
        * np.exp(-rate * np.minimum(y, polling_interval)),
        np.where(y < 0.0, 1.0, 0.0),
    )
    if vals.ndim == 0:
        return float(vals)
    return vals


def overhead_pdf(y, polling_interval: float = DEFAULT_POLLING_INTERVAL, rate: float = 0.0):
    """Density of Y on [0, P); zero elsewhere."""
    assert polling_interval > 0.0
    assert rate >= 0.0
    y = np.asarray(y, dtype=float)
    inside = (y >= 0.0) & (y < polling_interval)
    yy = np.minimum(np.maximum(y, 0.0), polling_interval)
    vals = np.where(
        inside,
        np.exp(-rate * yy) * (1.0 / polling_interval + rate * (1.0 - yy / polling_interval)),
        0.0,
    )
    if vals.ndim == 0:
        return float(vals)
    return vals


def overhead_mean(polling_interval: float = DEFAULT_POLLING_INTERVAL, rate: float = 0.0) -> float:
    """E[Y] = integral of the CCDF over [0, P], in closed form."""
    assert polling_interval > 0.0
    assert rate >= 0.0
    p = polling_interval
    if rate == 0.0:
        return p / 2.0
    a = rate * p
    # int_0^P (1 - y/P) e^{-rate y} dy = (a - 1 + e^{-a}) / (rate * a)
    return (a - 1.0 + math.exp(-a)) / (rate * a)


def sample_overhead(
    stream: RngStream,
    size=None,
    polling_interval: float = DEFAULT_POLLING_INTERVAL,
    rate: float = 0.0,
):
    """Draw Y = min(U(0, P), Exp(rate)).

    Consumes one uniform, then (when rate > 0) one exponential per draw, in
    that fixed order, so sequences are reproducible per stream.
    """
    assert polling_interval > 0.0
    assert rate >= 0.0
    gen = stream.generator
    timer = gen.uniform(0.0, polling_interval, size)
    if rate == 0.0:
        return timer
    event = gen.standard_exponential(size) / rate
    return np.minimum(timer, event) if size is not None else min(timer, event)
