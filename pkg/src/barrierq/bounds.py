"""Tail bounds on waiting and sojourn times via exponential envelopes.

The start recurrence of the one-barrier system is a G|G|1 queue in the
start increments Omega(n): job n+1 starts Omega(n) after job n once both
are backlogged.  With iid Exp(mu) tasks, Omega is a sum of exponential
stages, so its moment generating function is a product of j*mu/(j*mu-theta)
factors: stages j = s-k+1..s for a barrier job on s workers (the k-th
order statistic of s residual lifetimes) and k stages at rate s*mu for a
non-barrier job.  For Poisson(lam) arrivals the effective envelope rates

    rho_A(-theta) = ln((lam+theta)/lam) / theta
    rho_S(theta)  = ln E[exp(theta*Omega)] / theta

give P[W > tau] <= alpha * exp(-theta*tau) for every theta with
rho_S(theta) <= rho_A(-theta); alpha = 1 for renewal (GI) arrivals and
alpha = exp(theta*sigma_A) / (1 - exp(-theta*(rho_A - rho_S))) in the
general case (sigma_A = 0 for Poisson).  Sojourn bounds convolve the
waiting bound with the job's own slowest-task density.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .stability import harmonic

POLE_GUARD = 1e-9
THETA_GRID = 512
QUAD_FALLBACK_K = 40

# incremented whenever a closed-form sojourn evaluation falls back to
# numerical quadrature; sweep outputs snapshot it into run metadata
QUAD_FALLBACKS = 0


@dataclass(frozen=True)
class ServiceComponent:
    """One job population: probability, parallelism, barrier discipline."""

    prob: float
    k: int
    bem: bool = True

    def __post_init__(self):
        assert self.prob >= 0.0
        assert self.k >= 1


@dataclass(frozen=True)
class ServiceProcessSpec:
    """Mixture description of the start increments on s workers."""

    s: int
    mu: float
    components: tuple[ServiceComponent, ...]

    def __post_init__(self):
        assert self.s >= 1
        assert self.mu > 0.0
        assert self.components
        assert abs(sum(c.prob for c in self.components) - 1.0) < 1e-9
        assert all(c.k <= self.s for c in self.components)

    @classmethod
    def fixed(cls, s: int, mu: float, k: int, bem: bool = True) -> "ServiceProcessSpec":
        return cls(s, mu, (ServiceComponent(1.0, k, bem),))

    @classmethod
    def hybrid(cls, s: int, mu: float, k: int, p_bem: float) -> "ServiceProcessSpec":
        assert 0.0 <= p_bem <= 1.0
        return cls(
            s,
            mu,
            (
                ServiceComponent(p_bem, k, True),
                ServiceComponent(1.0 - p_bem, k, False),
            ),
        )

    @classmethod
    def random_k(cls, s: int, mu: float, pmf: dict[int, float], bem: bool = True):
        comps = tuple(ServiceComponent(p, k, bem) for k, p in sorted(pmf.items()))
        return cls(s, mu, comps)

    @property
    def k_max(self) -> int:
        return max(c.k for c in self.components)

    @property
    def theta_sup(self) -> float:
        """Upper end of the usable theta range: the slowest residual stage
        pole (s - k_max + 1) * mu."""
        return (self.s - self.k_max + 1) * self.mu

    @property
    def all_bem(self) -> bool:
        return all(c.bem for c in self.components)

    def mean_omega(self) -> float:
        """E[Omega]: mean start-to-start increment under backlog."""
        acc = 0.0
        for c in self.components:
            if c.bem:
                acc += c.prob * (harmonic(self.s) - harmonic(self.s - c.k)) / self.mu
            else:
                acc += c.prob * c.k / (self.s * self.mu)
        return acc

    def k_pmf(self) -> dict[int, float]:
        pmf: dict[int, float] = {}
        for c in self.components:
            pmf[c.k] = pmf.get(c.k, 0.0) + c.prob
        return pmf


def rho_A(lam: float, theta: float) -> float:
    """Arrival envelope rate at -theta for a Poisson(lam) process."""
    assert lam > 0.0 and theta > 0.0
    return math.log((lam + theta) / lam) / theta


def mgf_Q(theta: float, spec: ServiceProcessSpec) -> float:
    """MGF of the job service time Q (slowest of the job's k tasks),
    mixed over components.  Requires theta < mu."""
    mu = spec.mu
    assert 0.0 < theta < mu
    acc = 0.0
    for c in spec.components:
        prod = 1.0
        for j in range(1, c.k + 1):
            prod *= j * mu / (j * mu - theta)
        acc += c.prob * prod
    return acc


def mgf_Omega(theta: float, spec: ServiceProcessSpec) -> float:
    """MGF of the start increment Omega, mixed over components.
    Requires theta < spec.theta_sup."""
    s, mu = spec.s, spec.mu
    assert 0.0 < theta < spec.theta_sup
    acc = 0.0
    for c in spec.components:
        if c.bem:
            prod = 1.0
            for j in range(s - c.k + 1, s + 1):
                prod *= j * mu / (j * mu - theta)
        else:
            prod = (s * mu / (s * mu - theta)) ** c.k
        acc += c.prob * prod
    return acc


@dataclass(frozen=True)
class Envelope:
    theta: float
    rho_S: float
    sigma_S: float
    rho_A: float


def envelope(theta: float, lam: float, spec: ServiceProcessSpec) -> Envelope:
    """Service and arrival envelope rates at theta; sigma_S is the burst
    term ln(M_Q/M_Omega)/theta (requires theta < mu)."""
    m_omega = mgf_Omega(theta, spec)
    r_s = math.log(m_omega) / theta
    if theta < spec.mu:
        sigma = (math.log(mgf_Q(theta, spec)) - math.log(m_omega)) / theta
    else:
        sigma = math.inf
    return Envelope(theta=theta, rho_S=r_s, sigma_S=sigma, rho_A=rho_A(lam, theta))


# --- waiting-time bound -------------------------------------------------------


@dataclass(frozen=True)
class TailBound:
    stable: bool
    tau: float
    theta: float
    alpha: float


def _stable(lam: float, spec: ServiceProcessSpec) -> bool:
    return lam * spec.mean_omega() < 1.0 - 1e-9


def _theta_star(lam: float, spec: ServiceProcessSpec) -> float:
    """sup{theta: rho_S(theta) <= rho_A(-theta)} by bisection; rho_S
    increases and rho_A decreases in theta, so the root is unique."""
    hi = spec.theta_sup * (1.0 - POLE_GUARD)
    lo = spec.theta_sup * 1e-12

    def g(theta):
        return math.log(mgf_Omega(theta, spec)) / theta - rho_A(lam, theta)

    if g(hi) <= 0.0:
        return hi
    assert g(lo) < 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * spec.theta_sup:
            break
    return lo


def _theta_grid(spec: ServiceProcessSpec, n: int = THETA_GRID) -> np.ndarray:
    """Log-spaced candidate thetas on (0, theta_sup), nudged off the
    sojourn poles at (i+1)*mu."""
    hi = spec.theta_sup * (1.0 - POLE_GUARD)
    lo = min(spec.mu * 1e-6, hi * 1e-6)
    grid = np.geomspace(lo, hi, n)
    poles = spec.mu * np.arange(1, spec.k_max + 1)
    for p in poles:
        near = np.abs(grid - p) < POLE_GUARD * p
        grid[near] = p * (1.0 - 2.0 * POLE_GUARD)
    return grid


def waiting_quantile(
    eps: float, lam: float, spec: ServiceProcessSpec, variant: str = "gi"
) -> TailBound:
    """Smallest tau with bound P[W > tau] <= eps.

    gi: alpha = 1 and theta maximized (renewal arrivals).
    g: alpha(theta) = 1/(1 - exp(-theta*(rho_A - rho_S))), tau minimized
    over theta (general stationary arrivals, sigma_A = 0).
    """
    assert 0.0 < eps < 1.0
    assert lam > 0.0
    if not _stable(lam, spec):
        return TailBound(stable=False, tau=math.inf, theta=math.nan, alpha=math.nan)
    if variant == "gi":
        theta = _theta_star(lam, spec)
        return TailBound(stable=True, tau=-math.log(eps) / theta, theta=theta, alpha=1.0)
    if variant != "g":
        raise ValueError(f"unknown variant {variant!r}")

    def tau_of(theta: float) -> tuple[float, float]:
        delta = rho_A(lam, theta) - math.log(mgf_Omega(theta, spec)) / theta
        if delta <= 0.0:
            return math.inf, math.inf
        alpha = 1.0 / (1.0 - math.exp(-theta * delta))
        return max(math.log(alpha / eps), 0.0) / theta, alpha

    grid = _theta_grid(spec)
    taus = np.array([tau_of(t)[0] for t in grid])
    i = int(np.argmin(taus))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    theta = _golden_min(lambda t: tau_of(t)[0], lo, hi)
    tau, alpha = tau_of(theta)
    return TailBound(stable=True, tau=tau, theta=theta, alpha=alpha)


def _golden_min(f, lo: float, hi: float, iters: int = 80) -> float:
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - g * (b - a)
    d = a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
        if b - a <= 1e-12 * max(1.0, abs(b)):
            break
    return 0.5 * (a + b)


# --- sojourn-time bound -------------------------------------------------------


def sojourn_cdf_fixed_k(
    tau: float, theta: float, k: int, mu: float, alpha: float = 1.0
) -> float:
    """Lower bound on P[T <= tau] for a barrier job with k tasks, from
    convolving the waiting bound (parameters theta, alpha) with the
    slowest-of-k task density.  alpha = 1 is the GI form; the general form
    is zero below w0 = ln(alpha)/theta.

    Exact closed form: with E_b = exp(b*(w0 - tau)), b = (i+1)*mu,

        F(tau) = k * sum_{i=0}^{k-1} (-1)^i C(k-1, i)
                 [ (1 - E_b)/(i+1) - mu*(alpha*e^{-theta*tau} - E_b)/(b - theta) ]

    Falls back to direct quadrature for large k or when the alternating
    sum cancels catastrophically.
    """
    global QUAD_FALLBACKS
    assert k >= 1 and mu > 0.0 and theta > 0.0 and alpha >= 1.0
    w0 = math.log(alpha) / theta
    if tau <= w0:
        return 0.0
    if k > QUAD_FALLBACK_K:
        QUAD_FALLBACKS += 1
        return _sojourn_cdf_quad(tau, theta, k, mu, alpha)
    for i in range(k):
        b = (i + 1) * mu
        if abs(b - theta) < POLE_GUARD * b:
            theta = b * (1.0 - 2.0 * POLE_GUARD)
    terms = []
    e_th = alpha * math.exp(-theta * tau)
    for i in range(k):
        b = (i + 1) * mu
        e_b = math.exp(b * (w0 - tau))
        t_a = (1.0 - e_b) / (i + 1)
        t_b = mu * (e_th - e_b) / (b - theta)
        terms.append((-1.0 if i % 2 else 1.0) * math.comb(k - 1, i) * (t_a - t_b))
    val = k * math.fsum(terms)
    peak = k * max(abs(t) for t in terms)
    if peak > 0.0 and abs(val) < 1e-8 * peak:
        QUAD_FALLBACKS += 1
        return _sojourn_cdf_quad(tau, theta, k, mu, alpha)
    return val


def _sojourn_cdf_quad(tau: float, theta: float, k: int, mu: float, alpha: float) -> float:
    w0 = math.log(alpha) / theta
    if tau <= w0:
        return 0.0

    def integrand(x):
        fw = 1.0 - alpha * math.exp(-theta * (tau - x))
        fq = k * mu * math.exp(-mu * x) * (1.0 - math.exp(-mu * x)) ** (k - 1)
        return fw * fq

    val, _ = quad(integrand, 0.0, tau - w0, epsabs=1e-12, epsrel=1e-11, limit=200)
    return val


def sojourn_cdf(
    tau: float, theta: float, spec: ServiceProcessSpec, alpha: float = 1.0
) -> float:
    """Lower bound on P[T <= tau], unconditioned over the parallelism pmf.

    T <= W + Q for every component: barrier jobs start all tasks at the
    waiting epoch, and for loose jobs Q already assumes every task is
    still running when the last one starts."""
    acc = 0.0
    for kk, p in spec.k_pmf().items():
        acc += p * sojourn_cdf_fixed_k(tau, theta, kk, spec.mu, alpha)
    return acc


def _sojourn_tail_vec(
    tau: np.ndarray, theta: np.ndarray, spec: ServiceProcessSpec, alpha: np.ndarray
) -> np.ndarray:
    """Vectorized 1 - F_T(tau_i | theta_i, alpha_i) over aligned arrays."""
    mu = spec.mu
    w0 = np.log(alpha) / theta
    total = np.zeros_like(tau)
    e_th = alpha * np.exp(-theta * tau)
    for kk, p in spec.k_pmf().items():
        f = np.zeros_like(tau)
        for i in range(kk):
            b = (i + 1) * mu
            e_b = np.exp(b * (w0 - tau))
            t_a = (1.0 - e_b) / (i + 1)
            t_b = mu * (e_th - e_b) / (b - theta)
            f += ((-1.0) ** i * math.comb(kk - 1, i)) * (t_a - t_b)
        total += p * kk * f
    tail = 1.0 - total
    tail[tau <= w0] = 1.0
    return tail


def sojourn_quantile(
    eps: float,
    lam: float,
    spec: ServiceProcessSpec,
    variant: str = "gi",
    n_grid: int = THETA_GRID,
) -> TailBound:
    """Smallest tau with bound P[T > tau] <= eps, minimized over theta.

    For each feasible theta the tail bound is monotone in tau, so tau(theta)
    comes from bisection; the grid minimum is then refined by golden
    section.
    """
    assert 0.0 < eps < 1.0
    if not _stable(lam, spec):
        return TailBound(stable=False, tau=math.inf, theta=math.nan, alpha=math.nan)

    grid = _theta_grid(spec, n_grid)
    rho_s = np.array([math.log(mgf_Omega(t, spec)) / t for t in grid])
    rho_a = np.array([rho_A(lam, t) for t in grid])
    if variant == "gi":
        feasible = rho_s <= rho_a
        alphas = np.ones_like(grid)
    elif variant == "g":
        delta = rho_a - rho_s
        feasible = delta > 0.0
        alphas = np.full_like(grid, np.inf)
        alphas[feasible] = 1.0 / (1.0 - np.exp(-grid[feasible] * delta[feasible]))
    else:
        raise ValueError(f"unknown variant {variant!r}")
    if not feasible.any():
        return TailBound(stable=False, tau=math.inf, theta=math.nan, alpha=math.nan)
    thetas = grid[feasible]
    alphas = alphas[feasible]

    w0 = np.log(alphas) / thetas
    lo = w0.copy()
    hi = w0 + (1.0 / thetas + (spec.k_max + 1) / spec.mu)
    for _ in range(200):
        bad = _sojourn_tail_vec(hi, thetas, spec, alphas) > eps
        if not bad.any():
            break
        hi[bad] = w0[bad] + 2.0 * (hi[bad] - w0[bad])
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        over = _sojourn_tail_vec(mid, thetas, spec, alphas) > eps
        lo = np.where(over, mid, lo)
        hi = np.where(over, hi, mid)
    taus = hi
    i = int(np.argmin(taus))

    def tau_of(theta: float) -> float:
        e = envelope(theta, lam, spec)
        if variant == "gi":
            if e.rho_S > e.rho_A:
                return math.inf
            a = 1.0
        else:
            d = e.rho_A - e.rho_S
            if d <= 0.0:
                return math.inf
            a = 1.0 / (1.0 - math.exp(-theta * d))
        t_lo = math.log(a) / theta
        t_hi = t_lo + (1.0 / theta + (spec.k_max + 1) / spec.mu)
        for _ in range(200):
            if 1.0 - sojourn_cdf(t_hi, theta, spec, a) <= eps:
                break
            t_hi = t_lo + 2.0 * (t_hi - t_lo)
        for _ in range(60):
            m = 0.5 * (t_lo + t_hi)
            if 1.0 - sojourn_cdf(m, theta, spec, a) > eps:
                t_lo = m
            else:
                t_hi = m
        return t_hi

    t_lo = thetas[max(i - 1, 0)]
    t_hi = thetas[min(i + 1, len(thetas) - 1)]
    theta = _golden_min(tau_of, t_lo, t_hi, iters=24)
    best_tau = tau_of(theta)
    if taus[i] < best_tau:
        theta, best_tau = float(thetas[i]), float(taus[i])
    e = envelope(theta, lam, spec)
    if variant == "gi":
        alpha = 1.0
    else:
        alpha = 1.0 / (1.0 - math.exp(-theta * (e.rho_A - e.rho_S)))
    return TailBound(stable=True, tau=float(best_tau), theta=float(theta), alpha=float(alpha))
