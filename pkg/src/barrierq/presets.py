"""Figure-reproduction presets.

Each preset expands to a parameter grid, runs the analytic models and
(where the figure calls for them) simulations, and writes CSV files plus
a manifest.  The CSV column schemas here are the contract the plotting
package consumes; changes must stay backward compatible.

Grids follow the source figures; simulated sample counts are sized for
a workstation, so confidence bands are wider than the originals.
"""
from __future__ import annotations

import math
import sys

import numpy as np
from scipy import integrate, optimize, stats

from .config import Experiment
from .engine import estimate_max_stable_utilization, idle_gap_trace, quantile
from .model import OverheadConfig, single_class
from .outputs import write_csv, write_json
from .overhead import overhead_pdf
from .rng import REPLICATE, RngStream
from .stability import harmonic, max_util_1barrier, max_util_2barrier, skl_2barrier

WARMUP_FRACTION = 0.1


def _rep_stream(exp: Experiment, point: int, rep: int) -> RngStream:
    return RngStream(exp.seed, (REPLICATE, point, rep))


def _tail_quantile(xs: np.ndarray, q: float) -> float:
    cut = int(WARMUP_FRACTION * len(xs))
    return quantile(xs[cut:], q)


def _tail_mean(xs: np.ndarray) -> float:
    cut = int(WARMUP_FRACTION * len(xs))
    return float(np.mean(xs[cut:]))


# --- general-service order statistics (2-barrier (s,k,l) with bimodal tasks) --


def _order_stat_mean_sf(sf, k: int, j: int) -> float:
    """E[X_(j:k)] for iid tasks with survival function sf, by quadrature."""

    def tail(x):
        return stats.binom.cdf(j - 1, k, 1.0 - sf(x))

    value, err = integrate.quad(tail, 0.0, np.inf, limit=200)
    assert err < 1e-7 * max(1.0, value)
    return value


def _skl_2barrier_general(s: int, k: int, l: int, sf) -> tuple[float, float, float]:
    """(lam_max, rho_skl, rho_useful) for a 2-barrier (s,k,l) group with
    general iid task service; reduces to the closed form for exponential."""
    groups = s // k
    e_lk = _order_stat_mean_sf(sf, k, l)
    e_useful = sum(_order_stat_mean_sf(sf, k, j) for j in range(1, l + 1))
    e_total = e_useful + (k - l) * e_lk
    lam_max = groups / e_lk
    return lam_max, lam_max * e_total / s, lam_max * e_useful / s


# --- bound helpers -------------------------------------------------------------


def _service_quantile_mixture(eps: float, mu: float, k_pmf: dict[int, float]) -> float:
    """Exact (1-eps) quantile of the max of K iid exponentials, K ~ k_pmf."""

    def cdf(tau):
        return sum(p * (1.0 - math.exp(-mu * tau)) ** kk for kk, p in k_pmf.items())

    hi = 2.0 * (math.log(max(k_pmf)) + math.log(1.0 / eps)) / mu + 1.0
    return float(optimize.brentq(lambda t: cdf(t) - (1.0 - eps), 0.0, hi))


def _mean_waiting_bound(theta: float, alpha: float) -> float:
    # integral of min(1, alpha e^{-theta tau}) over tau >= 0
    if alpha <= 1.0:
        return alpha / theta
    return (1.0 + math.log(alpha)) / theta


# --- fig2: max stable utilization vs worker count ------------------------------

FIG2_S = (2, 4, 8, 16, 32, 64)
FIG2_K = (2, 4, 8)


def _fig2(exp: Experiment, cfg_hash: str):
    rows, points = [], []
    reps = exp.sweep.replications
    index = 0
    for mode in ("one_barrier", "two_barrier"):
        for k in FIG2_K:
            for s in FIG2_S:
                if k > s:
                    continue
                analytic = (
                    max_util_1barrier(s, k) if mode == "one_barrier" else max_util_2barrier(k)
                )
                try:
                    cfg, wl = single_class(s=s, k=k, mu=1.0, lam=1.0, mode=mode)
                    values = []
                    for rep in range(reps):
                        est = estimate_max_stable_utilization(
                            cfg,
                            wl,
                            rng=_rep_stream(exp, index, rep),
                            probe_jobs=exp.sim.jobs,
                        )
                        values.append(est.value)
                except Exception as exc:
                    points.append(
                        {
                            "index": index,
                            "params": {"s": s, "k": k, "mode": mode},
                            "status": "failure",
                            "error": f"{type(exc).__name__}: {exc}",
                        }
                    )
                    index += 1
                    continue
                rows.append(
                    {
                        "s": s,
                        "k": k,
                        "mode": mode,
                        "analytic": analytic,
                        "sim_mean": sum(values) / len(values),
                        "sim_min": min(values),
                        "sim_max": max(values),
                    }
                )
                points.append(
                    {
                        "index": index,
                        "params": {"s": s, "k": k, "mode": mode},
                        "status": "success",
                        "seed": exp.seed,
                        "replications": reps,
                    }
                )
                index += 1
    write_csv(
        f"{exp.out_dir}/fig2.csv",
        ["s", "k", "mode", "analytic", "sim_mean", "sim_min", "sim_max"],
        rows,
        cfg_hash,
        exp.seed,
    )
    return {"fig2": "fig2.csv"}, points, []


# --- fig3: 2-barrier (s,k,l) utilization vs l ----------------------------------

FIG3_SERVICES = (
    ("exponential", ((1.0, 1.0),)),
    ("bimodal_10x", ((0.9, 1.0), (0.1, 0.1))),
    ("bimodal_100x", ((0.9, 1.0), (0.1, 0.01))),
)


def _fig3(exp: Experiment, cfg_hash: str):
    s = k = 16
    rows, points = [], []
    index = 0
    for name, branches in FIG3_SERVICES:
        def sf(x, branches=branches):
            return sum(p * math.exp(-r * x) for p, r in branches)

        mean_service = sum(p / r for p, r in branches)
        for l in range(1, k + 1):
            if name == "exponential":
                skl = skl_2barrier(s, k, l, 1.0)
                lam_max, rho, useful = skl.lam_max, skl.rho_skl, skl.rho_useful
            else:
                lam_max, rho, useful = _skl_2barrier_general(s, k, l, sf)
            rows.append(
                {
                    "service": name,
                    "l": l,
                    "mean_service": mean_service,
                    "lam_max": lam_max,
                    "rho_skl": rho,
                    "rho_useful": useful,
                }
            )
            points.append(
                {
                    "index": index,
                    "params": {"service": name, "l": l},
                    "status": "success",
                    "replications": 1,
                }
            )
            index += 1
    write_csv(
        f"{exp.out_dir}/fig3.csv",
        ["service", "l", "mean_service", "lam_max", "rho_skl", "rho_useful"],
        rows,
        cfg_hash,
        exp.seed,
    )
    return {"fig3": "fig3.csv"}, points, []


# --- fig4: 1-barrier vs 2-barrier (s,k,l) utilization vs s ---------------------

FIG4_S = (16, 20, 24, 28, 32, 40, 48, 56, 64)
FIG4_K = 16
FIG4_L = 8


def _fig4(exp: Experiment, cfg_hash: str):
    from .ctmc import max_utilization_1barrier_skl

    k, l = FIG4_K, FIG4_L
    rows, points = [], []
    index = 0
    for s in FIG4_S:
        ctmc = max_utilization_1barrier_skl(s, k, l, 1.0)
        rows.append(
            {
                "s": s, "k": k, "l": l, "mode": "one_barrier_skl",
                "n_states": ctmc.n_states,
                "lam_max": ctmc.throughput,
                "rho_total": ctmc.rho_total,
                "rho_useful": ctmc.rho_useful,
            }
        )
        skl = skl_2barrier(s, k, l, 1.0)
        rows.append(
            {
                "s": s, "k": k, "l": l, "mode": "two_barrier_skl",
                "n_states": None,
                "lam_max": skl.lam_max,
                "rho_total": skl.rho_skl,
                "rho_useful": skl.rho_useful,
            }
        )
        points.append(
            {"index": index, "params": {"s": s}, "status": "success", "replications": 1}
        )
        index += 1
    write_csv(
        f"{exp.out_dir}/fig4.csv",
        ["s", "k", "l", "mode", "n_states", "lam_max", "rho_total", "rho_useful"],
        rows,
        cfg_hash,
        exp.seed,
    )
    return {"fig4": "fig4.csv"}, points, []


# --- fig5: hybrid BEM fraction, 1e-6 quantile bounds ----------------------------

FIG5_S, FIG5_K, FIG5_RHO, FIG5_EPS = 32, 16, 0.7, 1e-6


def _fig5(exp: Experiment, cfg_hash: str):
    from .bounds import ServiceProcessSpec, sojourn_quantile, waiting_quantile

    s, k, mu = FIG5_S, FIG5_K, 1.0
    lam = FIG5_RHO * s * mu / k
    tau_service = _service_quantile_mixture(FIG5_EPS, mu, {k: 1.0})
    rows, points = [], []
    for index, p_bem in enumerate(np.linspace(0.0, 1.0, 11)):
        spec = ServiceProcessSpec.hybrid(s, mu, k, float(p_bem))
        bw = waiting_quantile(FIG5_EPS, lam, spec)
        bt = sojourn_quantile(FIG5_EPS, lam, spec)
        for metric, tau, theta, alpha in (
            ("waiting", bw.tau, bw.theta, bw.alpha),
            ("sojourn", bt.tau, bt.theta, bt.alpha),
            ("service", tau_service, None, None),
        ):
            rows.append(
                {
                    "p_bem": float(p_bem),
                    "metric": metric,
                    "tau": tau,
                    "theta": theta,
                    "alpha": alpha,
                }
            )
        points.append(
            {
                "index": index,
                "params": {"p_bem": float(p_bem)},
                "status": "success",
                "replications": 1,
            }
        )
    write_csv(
        f"{exp.out_dir}/fig5.csv",
        ["p_bem", "metric", "tau", "theta", "alpha"],
        rows,
        cfg_hash,
        exp.seed,
    )
    return {"fig5": "fig5.csv"}, points, []


# --- fig6: bimodal K(n), 1e-6 quantile bounds -----------------------------------

FIG6_PAIRS = ((2, 16), (4, 24))
FIG6_S, FIG6_RHO, FIG6_EPS = 32, 0.4, 1e-6


def _fig6(exp: Experiment, cfg_hash: str):
    from .bounds import ServiceProcessSpec, sojourn_quantile, waiting_quantile

    s, mu = FIG6_S, 1.0
    rows, points = [], []
    index = 0
    for k_small, k_large in FIG6_PAIRS:
        name = f"k{k_small}_k{k_large}"
        for frac_wide in np.linspace(0.0, 1.0, 11):
            pmf = {k_small: 1.0 - float(frac_wide), k_large: float(frac_wide)}
            pmf = {kk: p for kk, p in pmf.items() if p > 0.0}
            mean_k = sum(kk * p for kk, p in pmf.items())
            lam = FIG6_RHO * s * mu / mean_k
            spec = ServiceProcessSpec.random_k(s, mu, pmf)
            bw = waiting_quantile(FIG6_EPS, lam, spec)
            bt = sojourn_quantile(FIG6_EPS, lam, spec)
            tau_service = _service_quantile_mixture(FIG6_EPS, mu, pmf)
            for metric, tau, theta, alpha in (
                ("waiting", bw.tau, bw.theta, bw.alpha),
                ("sojourn", bt.tau, bt.theta, bt.alpha),
                ("service", tau_service, None, None),
            ):
                rows.append(
                    {
                        "example": name,
                        "k_small": k_small,
                        "k_large": k_large,
                        "frac_wide": float(frac_wide),
                        "metric": metric,
                        "tau": tau,
                        "theta": theta,
                        "alpha": alpha,
                    }
                )
            points.append(
                {
                    "index": index,
                    "params": {"example": name, "frac_wide": float(frac_wide)},
                    "status": "success",
                    "replications": 1,
                }
            )
            index += 1
    write_csv(
        f"{exp.out_dir}/fig6.csv",
        ["example", "k_small", "k_large", "frac_wide", "metric", "tau", "theta", "alpha"],
        rows,
        cfg_hash,
        exp.seed,
    )
    return {"fig6": "fig6.csv"}, points, []


# --- fig7/fig8: bounds vs simulation across (rho, k) ----------------------------

FIG7_S = 32
FIG7_RHO = (0.3, 0.5, 0.7)
FIG7_K = tuple(range(2, 33, 2))
FIG7_EPS = 1e-2
# quantiles within this fraction of the stability boundary need sample
# sizes beyond a workstation run, so the grid stops short of the edge
FIG7_HEADROOM = 0.9


def _sim_onebarrier(exp: Experiment, index: int, s: int, k: int, lam: float, mu: float):
    """Replicated kernel runs; returns (waiting, sojourn) sample arrays."""
    from .fastsim import one_barrier_run

    reps = exp.sweep.replications
    out = []
    for rep in range(reps):
        w, t, _ = one_barrier_run(exp.sim.jobs, s, k, lam, mu, _rep_stream(exp, index, rep))
        out.append((w, t))
    return out


def _fig7_like(exp: Experiment, cfg_hash: str, means: bool):
    from .bounds import sojourn_cdf, sojourn_quantile, waiting_quantile
    from .bounds import ServiceProcessSpec

    s = FIG7_S
    rows, points, excluded = [], [], []
    index = 0
    for rho in FIG7_RHO:
        for k in FIG7_K:
            params = {"rho": rho, "k": k}
            # the figure's domain ends short of the stability boundary;
            # combos beyond it are not grid points, only recorded
            if max_util_1barrier(s, k) <= rho:
                excluded.append({"params": params, "reason": "outside the stability region"})
                continue
            if rho > FIG7_HEADROOM * max_util_1barrier(s, k):
                excluded.append(
                    {"params": params, "reason": "within 10% of the stability boundary"}
                )
                continue
            # task service mean scales as s/k so the offered work per unit time
            # depends only on the arrival rate and rho = lam
            lam, mu = rho, k / s
            try:
                spec = ServiceProcessSpec.fixed(s, mu, k)
                bw = waiting_quantile(FIG7_EPS, lam, spec)
                bt = sojourn_quantile(FIG7_EPS, lam, spec)
                samples = _sim_onebarrier(exp, index, s, k, lam, mu)
            except Exception as exc:
                points.append(
                    {
                        "index": index,
                        "params": params,
                        "status": "failure",
                        "error": f"{type(exc).__name__}: {exc}",
                    }
                )
                index += 1
                continue
            if means:
                sim_w = [_tail_mean(w) for w, _ in samples]
                sim_t = [_tail_mean(t) for _, t in samples]
                bound_w = _mean_waiting_bound(bw.theta, bw.alpha)
                bound_t, _ = integrate.quad(
                    lambda tau: 1.0 - sojourn_cdf(tau, bt.theta, spec, bt.alpha),
                    0.0,
                    np.inf,
                    limit=200,
                )
            else:
                q = 1.0 - FIG7_EPS
                sim_w = [_tail_quantile(w, q) for w, _ in samples]
                sim_t = [_tail_quantile(t, q) for _, t in samples]
                bound_w, bound_t = bw.tau, bt.tau
            for metric, sims, bound in (("waiting", sim_w, bound_w), ("sojourn", sim_t, bound_t)):
                rows.append(
                    {
                        "rho": rho,
                        "k": k,
                        "k_over_s": k / s,
                        "metric": metric,
                        "sim_q": sum(sims) / len(sims),
                        "sim_q_min": min(sims),
                        "sim_q_max": max(sims),
                        "bound_q": bound,
                    }
                )
            points.append(
                {
                    "index": index,
                    "params": params,
                    "status": "success",
                    "seed": exp.seed,
                    "replications": exp.sweep.replications,
                }
            )
            index += 1
    name = "fig8" if means else "fig7"
    write_csv(
        f"{exp.out_dir}/{name}.csv",
        ["rho", "k", "k_over_s", "metric", "sim_q", "sim_q_min", "sim_q_max", "bound_q"],
        rows,
        cfg_hash,
        exp.seed,
    )
    return {name: f"{name}.csv"}, points, excluded


def _fig7(exp: Experiment, cfg_hash: str):
    return _fig7_like(exp, cfg_hash, means=False)


def _fig8(exp: Experiment, cfg_hash: str):
    return _fig7_like(exp, cfg_hash, means=True)


# --- fig9: idle-gap histogram with analytic overlay ------------------------------

FIG9_S, FIG9_K, FIG9_RHO = 32, (6, 11), 0.7
FIG9_POLLING = 1.0
FIG9_CURVE_POINTS = 257


def _fig9(exp: Experiment, cfg_hash: str):
    sample_rows, curve_rows, points = [], [], []
    for index, k in enumerate(FIG9_K):
        # same service scaling as the quantile figures: mean s/k per task,
        # so the arrival rate equals the utilization and the analytic gap
        # density is shared by both k values
        lam = FIG9_RHO
        cfg, wl = single_class(
            s=FIG9_S,
            k=k,
            mu=k / FIG9_S,
            lam=lam,
            overhead=OverheadConfig(polling_interval=FIG9_POLLING, rate=None),
        )
        gaps = idle_gap_trace(
            cfg, wl, horizon_jobs=exp.sim.jobs, rng=_rep_stream(exp, index, 0)
        )
        gaps = gaps[gaps > 0.0]
        sample_rows.extend({"k": k, "gap": float(g)} for g in gaps)
        for y in np.linspace(0.0, FIG9_POLLING, FIG9_CURVE_POINTS):
            curve_rows.append(
                {
                    "k": k,
                    "y": float(y),
                    "pdf": float(overhead_pdf(y, FIG9_POLLING, lam)),
                }
            )
        points.append(
            {
                "index": index,
                "params": {"k": k, "lam": lam},
                "status": "success",
                "seed": exp.seed,
                "n_samples": int(len(gaps)),
                "replications": 1,
            }
        )
    write_csv(f"{exp.out_dir}/fig9_samples.csv", ["k", "gap"], sample_rows, cfg_hash, exp.seed)
    write_csv(f"{exp.out_dir}/fig9_curve.csv", ["k", "y", "pdf"], curve_rows, cfg_hash, exp.seed)
    return {"samples": "fig9_samples.csv", "curve": "fig9_curve.csv"}, points, []


PRESETS = {
    "fig2": _fig2,
    "fig3": _fig3,
    "fig4": _fig4,
    "fig5": _fig5,
    "fig6": _fig6,
    "fig7": _fig7,
    "fig8": _fig8,
    "fig9": _fig9,
}


def run_figure(exp: Experiment, cfg_hash: str) -> int:
    files, points, excluded = PRESETS[exp.figure](exp, cfg_hash)
    payload = {
        "command": "figure",
        "figure": exp.figure,
        "files": files,
        "points": points,
    }
    if excluded:
        payload["excluded"] = excluded
    write_json(f"{exp.out_dir}/manifest.json", payload, cfg_hash, exp.seed)
    failed = [p for p in points if p["status"] == "failure"]
    if failed:
        print(
            f"{exp.figure}: {len(failed)} of {len(points)} grid points failed;"
            " see manifest.json",
            file=sys.stderr,
        )
        return 2
    print(f"{exp.figure}: wrote {', '.join(files.values())} -> {exp.out_dir}")
    return 0
