"""Command-line entry point.

One executable, one experiment file.  The file's `command` key selects
what runs; flags override the file's seed, job count, output directory,
and figure id before anything executes, so the config hash embedded in
every output reflects what actually ran.

Exit codes: 0 full success, 1 config error, 2 partial sweep failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .config import (
    FIGURE_IDS,
    Experiment,
    config_hash,
    parse_config,
)
from .ctmc import max_utilization_1barrier_skl, stationary_occupancy
from .engine import run
from .model import BarrierMode, Exponential, utilization
from .outputs import write_csv, write_json
from .overhead import overhead_ccdf, overhead_mean, overhead_pdf, sample_overhead
from .rng import OVERHEAD, RngStream
from .stability import (
    harmonic,
    max_util_1barrier,
    max_util_2barrier,
    mean_start_overhead,
    skl_2barrier,
)

# one-barrier (s,k,l) state spaces larger than this are reported as
# "not computed" in the stability report instead of blocking the CLI
CTMC_STATE_CAP = 50_000


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="barrierq",
        description="Queueing analysis and simulation of barrier-mode parallel jobs.",
    )
    parser.add_argument("--config", metavar="PATH", help="experiment file (JSON)")
    parser.add_argument("--out", metavar="DIR", help="output directory override")
    parser.add_argument("--seed", type=int, metavar="N", help="seed override")
    parser.add_argument("--jobs", type=int, metavar="N", help="simulated job count override")
    parser.add_argument(
        "--figure",
        metavar="ID",
        choices=FIGURE_IDS,
        help="run a figure preset (forces command=figure)",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.config is None and args.figure is None:
        print("error: --config or --figure is required", file=sys.stderr)
        return 1

    if args.config is not None:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except FileNotFoundError:
            print(f"error: config file not found: {args.config}", file=sys.stderr)
            return 1
        except json.JSONDecodeError as exc:
            print(f"error: config file is not valid JSON: {exc}", file=sys.stderr)
            return 1
        if not isinstance(raw, dict):
            print("error: config: expected a JSON object", file=sys.stderr)
            return 1
    else:
        raw = {"command": "figure"}

    if args.figure is not None:
        raw["command"] = "figure"
        raw["figure"] = args.figure
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.jobs is not None:
        raw.setdefault("simulate", {})["jobs"] = args.jobs
    if args.out is not None:
        raw.setdefault("output", {})["dir"] = args.out

    exp, errs = parse_config(raw)
    if errs:
        for err in errs:
            print(f"error: {err}", file=sys.stderr)
        return 1

    cfg_hash = config_hash(raw)
    if exp.command == "simulate":
        return cmd_simulate(exp, cfg_hash)
    if exp.command == "stability":
        return cmd_stability(exp, cfg_hash)
    if exp.command == "ctmc":
        return cmd_ctmc(exp, cfg_hash)
    if exp.command == "bounds":
        return cmd_bounds(exp, cfg_hash)
    if exp.command == "overhead":
        return cmd_overhead(exp, cfg_hash)
    if exp.command == "sweep":
        from .sweep import run_sweep

        return run_sweep(exp, cfg_hash)
    from .presets import run_figure

    return run_figure(exp, cfg_hash)


# --- simulate -----------------------------------------------------------------


JOB_COLUMNS = ["n", "class", "k", "A", "W", "T", "preempted"]


def cmd_simulate(exp: Experiment, cfg_hash: str) -> int:
    res = run(
        exp.system,
        exp.workload,
        horizon_jobs=exp.sim.jobs,
        warmup=exp.sim.warmup,
        seed=exp.seed,
        quantile_levels=exp.sim.quantiles,
    )
    rows = [
        {
            "n": int(res.job_n[i]),
            "class": int(res.job_cls[i]),
            "k": int(res.job_k[i]),
            "A": float(res.job_arrival[i]),
            "W": float(res.job_waiting[i]),
            "T": float(res.job_sojourn[i]),
            "preempted": int(res.job_preempted[i]),
        }
        for i in range(len(res.job_n))
    ]
    write_csv(f"{exp.out_dir}/jobs.csv", JOB_COLUMNS, rows, cfg_hash, exp.seed)
    write_json(
        f"{exp.out_dir}/summary.json",
        {"config": exp.raw, **res.summary()},
        cfg_hash,
        exp.seed,
    )
    print(f"simulate: {res.n_departed} jobs -> {exp.out_dir}/jobs.csv")
    return 0


# --- stability ----------------------------------------------------------------


def _skl_window_cap(s: int, k: int, l: int) -> int:
    # coarse upper bound on the CTMC state count: compositions of the
    # start-count window, ignoring feasibility cuts
    return math.comb(s - k + l, l)


def stability_report(exp: Experiment) -> dict:
    cfg, wl = exp.system, exp.workload
    cls = wl.classes[0]
    s, k, l = cfg.s, cls.fixed_k, cfg.skl_l
    mu = cls.service.rate
    lam = wl.arrivals.mean_rate()

    one = {
        "max_utilization": max_util_1barrier(s, k),
        "lam_max": max_util_1barrier(s, k) * s * mu / k,
        "mean_start_overhead": mean_start_overhead(s, k, mu),
    }
    groups = s // k
    two = {
        "max_utilization": max_util_2barrier(k),
        "lam_max": groups * mu / harmonic(k),
        "groups": groups,
        "idle_workers": s - groups * k,
    }
    report: dict = {
        "s": s,
        "k": k,
        "l": l,
        "mu": mu,
        "arrival_rate": lam,
        "offered_utilization": utilization(cfg, wl),
        "one_barrier": one,
        "two_barrier": two,
    }
    if l is not None:
        skl = skl_2barrier(s, k, l, mu)
        report["two_barrier_skl"] = {
            "lam_max": skl.lam_max,
            "rho_skl": skl.rho_skl,
            "rho_useful": skl.rho_useful,
            "groups": skl.groups,
            "idle_workers": skl.idle_workers,
        }
        entry: dict = {"closed_form": None}
        if _skl_window_cap(s, k, l) <= CTMC_STATE_CAP:
            ctmc = max_utilization_1barrier_skl(s, k, l, mu)
            entry.update(
                n_states=ctmc.n_states,
                lam_max=ctmc.throughput,
                rho_total=ctmc.rho_total,
                rho_useful=ctmc.rho_useful,
            )
        else:
            entry["note"] = "state space too large; run the ctmc command on a smaller case"
        report["one_barrier_skl"] = entry

    mode_key = {
        (BarrierMode.ONE, False): "one_barrier",
        (BarrierMode.TWO, False): "two_barrier",
        (BarrierMode.ONE, True): "one_barrier_skl",
        (BarrierMode.TWO, True): "two_barrier_skl",
    }[(cfg.mode, l is not None)]
    lam_max = report[mode_key].get("lam_max")
    report["configured"] = {
        "mode": cfg.mode.value,
        "skl_l": l,
        "discipline": mode_key,
        "lam_max": lam_max,
        "stable": None if lam_max is None else bool(lam < lam_max),
    }
    return report


def _format_stability(report: dict) -> str:
    lines = [
        "stability report: s={s} k={k} l={l} mu={mu} lam={arrival_rate:.6g}".format(**report)
    ]
    lines.append(f"{'discipline':<18}{'lam_max':>12}{'max_util':>12}{'rho_useful':>12}")
    for key in ("one_barrier", "two_barrier", "two_barrier_skl", "one_barrier_skl"):
        entry = report.get(key)
        if entry is None:
            continue
        lam_max = entry.get("lam_max")
        util = entry.get("max_utilization", entry.get("rho_skl", entry.get("rho_total")))
        useful = entry.get("rho_useful")
        cells = [
            f"{lam_max:>12.6f}" if lam_max is not None else f"{'n/a':>12}",
            f"{util:>12.6f}" if util is not None else f"{'n/a':>12}",
            f"{useful:>12.6f}" if useful is not None else f"{'':>12}",
        ]
        lines.append(f"{key:<18}" + "".join(cells))
    conf = report["configured"]
    verdict = {True: "stable", False: "unstable", None: "undetermined"}[conf["stable"]]
    lam_max = "n/a" if conf["lam_max"] is None else f"{conf['lam_max']:.6g}"
    lines.append(
        f"configured {conf['discipline']}: lam={report['arrival_rate']:.6g}"
        f" vs lam_max={lam_max} -> {verdict}"
    )
    return "\n".join(lines)


def cmd_stability(exp: Experiment, cfg_hash: str) -> int:
    report = stability_report(exp)
    print(_format_stability(report))
    write_json(f"{exp.out_dir}/stability.json", report, cfg_hash, exp.seed)
    return 0


# --- ctmc ---------------------------------------------------------------------


def cmd_ctmc(exp: Experiment, cfg_hash: str) -> int:
    cfg, wl = exp.system, exp.workload
    cls = wl.classes[0]
    s, k, l = cfg.s, cls.fixed_k, cfg.skl_l
    mu = cls.service.rate
    res = max_utilization_1barrier_skl(s, k, l, mu, per_job_rates=exp.ctmc.per_job_rates)
    payload = {
        "s": s,
        "k": k,
        "l": l,
        "mu": mu,
        "per_job_rates": exp.ctmc.per_job_rates,
        "n_states": res.n_states,
        "throughput": res.throughput,
        "rho_total": res.rho_total,
        "rho_useful": res.rho_useful,
    }
    write_json(f"{exp.out_dir}/ctmc.json", payload, cfg_hash, exp.seed)
    if exp.ctmc.dump_pi:
        occ = stationary_occupancy(s, k, l, mu, per_job_rates=exp.ctmc.per_job_rates)
        coord_cols = [f"c{j}" for j in range(k - l + 1, k + 1)]
        rows = []
        for state, pi in sorted(occ.items()):
            row = {col: state[i] for i, col in enumerate(coord_cols)}
            row["busy"] = sum(
                c * r for c, r in zip(state, range(k - l + 1, k + 1))
            )
            row["pi"] = pi
            rows.append(row)
        write_csv(
            f"{exp.out_dir}/ctmc_pi.csv", coord_cols + ["busy", "pi"], rows, cfg_hash, exp.seed
        )
    print(
        f"ctmc: {res.n_states} states, throughput {res.throughput:.6f},"
        f" rho_total {res.rho_total:.6f}, rho_useful {res.rho_useful:.6f}"
    )
    return 0


# --- bounds -------------------------------------------------------------------


def service_process_spec(exp: Experiment):
    """Mixture description of the configured workload for the bound math."""
    from .bounds import ServiceComponent, ServiceProcessSpec

    wl = exp.workload
    mu = wl.classes[0].service.rate
    comps = []
    for cls, prob in zip(wl.classes, wl.class_probs()):
        for kk, pk in sorted(cls.k_pmf().items()):
            if pk > 0.0:
                comps.append(ServiceComponent(prob * pk, kk, cls.barrier))
    return ServiceProcessSpec(exp.system.s, mu, tuple(comps))


def cmd_bounds(exp: Experiment, cfg_hash: str) -> int:
    from .bounds import sojourn_cdf, sojourn_quantile, waiting_quantile

    spec = service_process_spec(exp)
    lam = exp.workload.arrivals.mean_rate()
    opts = exp.bounds

    results: dict[str, dict] = {}
    stable = True
    for metric in opts.metrics:
        fn = waiting_quantile if metric == "waiting" else sojourn_quantile
        per_eps = {}
        for eps in opts.epsilons:
            b = fn(eps, lam, spec, variant=opts.variant)
            stable &= b.stable
            per_eps[str(eps)] = {
                "tau": b.tau if math.isfinite(b.tau) else None,
                "theta": b.theta,
                "alpha": b.alpha,
                "stable": b.stable,
            }
        results[metric] = per_eps

    payload: dict = {
        "s": spec.s,
        "mu": spec.mu,
        "arrival_rate": lam,
        "variant": opts.variant,
        "stable": stable,
        "bounds": results,
    }
    if not stable:
        payload["message"] = (
            "unstable: no theta in (0, theta_sup) satisfies rho_S(theta) < rho_A(-theta);"
            " the service envelope rate never drops below the arrival envelope rate"
        )
        print(payload["message"], file=sys.stderr)
    write_json(f"{exp.out_dir}/bounds.json", payload, cfg_hash, exp.seed)

    curve_rows: list[dict] = []
    if stable and opts.curve_points > 0:
        tau_ref = max(
            (
                entry["tau"]
                for per_eps in results.values()
                for entry in per_eps.values()
                if entry["tau"] is not None
            ),
            default=1.0,
        )
        tau_max = opts.curve_tau_max if opts.curve_tau_max is not None else 2.0 * tau_ref
        taus = np.linspace(0.0, tau_max, opts.curve_points)
        for metric in opts.metrics:
            ref = min(opts.epsilons)
            b = (waiting_quantile if metric == "waiting" else sojourn_quantile)(
                ref, lam, spec, variant=opts.variant
            )
            for tau in taus:
                if metric == "waiting":
                    tail = min(1.0, b.alpha * math.exp(-b.theta * tau))
                    cdf = 1.0 - tail
                else:
                    cdf = sojourn_cdf(float(tau), b.theta, spec, b.alpha)
                curve_rows.append(
                    {"metric": metric, "tau": float(tau), "cdf_lower": float(cdf)}
                )
    write_csv(
        f"{exp.out_dir}/bounds_cdf.csv",
        ["metric", "tau", "cdf_lower"],
        curve_rows,
        cfg_hash,
        exp.seed,
    )
    return 0


# --- overhead -----------------------------------------------------------------


def cmd_overhead(exp: Experiment, cfg_hash: str) -> int:
    ov = exp.system.overhead
    rate = ov.rate
    if rate is None:
        rate = exp.workload.arrivals.mean_rate()
    p = ov.polling_interval
    ys = np.linspace(0.0, p, exp.overhead.points)
    rows = [
        {
            "y": float(y),
            "ccdf": float(overhead_ccdf(y, p, rate)),
            "pdf": float(overhead_pdf(y, p, rate)),
        }
        for y in ys
    ]
    write_csv(f"{exp.out_dir}/overhead.csv", ["y", "ccdf", "pdf"], rows, cfg_hash, exp.seed)
    write_json(
        f"{exp.out_dir}/overhead.json",
        {"polling_interval": p, "rate": rate, "mean": overhead_mean(p, rate)},
        cfg_hash,
        exp.seed,
    )
    if exp.overhead.samples > 0:
        stream = RngStream(exp.seed, (OVERHEAD,))
        draws = sample_overhead(stream, exp.overhead.samples, p, rate)
        write_csv(
            f"{exp.out_dir}/overhead_samples.csv",
            ["y"],
            [{"y": float(v)} for v in draws],
            cfg_hash,
            exp.seed,
        )
    print(f"overhead: mean {overhead_mean(p, rate):.6f} -> {exp.out_dir}/overhead.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
