"""Parameter sweeps: cross-product grids over an experiment file.

Each grid point is the base config with the axis values patched in,
re-validated, and simulated `replications` times under derived seeds.
A failed point (invalid combination, runtime error) is recorded in the
manifest and the sweep moves on; partial failure surfaces as exit
code 2.
"""
from __future__ import annotations

import copy
import itertools
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .config import Experiment, parse_config, set_by_path
from .engine import run
from .outputs import write_csv, write_json
from .rng import REPLICATE, RngStream

BASE_METRICS = [
    "mean_waiting",
    "mean_sojourn",
    "mean_server_time",
    "mean_useful_time",
    "busy_fraction",
]


def _metric_columns(quantiles: tuple[float, ...]) -> list[str]:
    cols = list(BASE_METRICS)
    for q in quantiles:
        cols.append(f"waiting_q{q:g}")
    for q in quantiles:
        cols.append(f"sojourn_q{q:g}")
    return cols


def _point_raw(base_raw: dict, params: dict) -> dict:
    raw = copy.deepcopy(base_raw)
    raw["command"] = "simulate"
    for path, value in params.items():
        set_by_path(raw, path, value)
    return raw


def _metrics(res, quantiles: tuple[float, ...]) -> dict:
    row = {
        "mean_waiting": res.mean_waiting,
        "mean_sojourn": res.mean_sojourn,
        "mean_server_time": res.mean_server_time,
        "mean_useful_time": res.mean_useful_time,
        "busy_fraction": res.busy_fraction,
    }
    for q in quantiles:
        row[f"waiting_q{q:g}"] = res.waiting_quantile(q)
    for q in quantiles:
        row[f"sojourn_q{q:g}"] = res.sojourn_quantile(q)
    return row


def run_point(base_raw: dict, index: int, params: dict, seed: int, replications: int):
    """Simulate one grid point; returns (index, rows, rng_paths, error)."""
    try:
        point, errs = parse_config(_point_raw(base_raw, params))
    except (KeyError, IndexError, TypeError) as exc:
        return index, [], [], f"axis path does not resolve: {exc!r}"
    if errs:
        return index, [], [], "; ".join(errs)
    rows, paths = [], []
    try:
        for rep in range(replications):
            path = (REPLICATE, index, rep)
            res = run(
                point.system,
                point.workload,
                horizon_jobs=point.sim.jobs,
                warmup=point.sim.warmup,
                rng=RngStream(seed, path),
                quantile_levels=point.sim.quantiles,
            )
            row = {"point": index, "rep": rep, "n_jobs": res.n_departed, **params}
            row.update(_metrics(res, point.sim.quantiles))
            rows.append(row)
            paths.append(list(path))
    except Exception as exc:
        return index, [], [], f"{type(exc).__name__}: {exc}"
    return index, rows, paths, None


def _run_point_star(args):
    return run_point(*args)


def _aggregate(point_rows: list[dict], params: dict, index: int, metric_cols: list[str]) -> dict:
    agg = {"point": index, "replications": len(point_rows), **params}
    for col in metric_cols:
        values = [row[col] for row in point_rows]
        agg[f"{col}_mean"] = sum(values) / len(values)
        agg[f"{col}_min"] = min(values)
        agg[f"{col}_max"] = max(values)
    return agg


def run_sweep(exp: Experiment, cfg_hash: str) -> int:
    axes = exp.sweep.axes
    grid = [
        dict(zip([ax.path for ax in axes], combo))
        for combo in itertools.product(*[ax.values for ax in axes])
    ]
    replications = exp.sweep.replications
    workers = exp.sweep.workers or os.cpu_count() or 1

    tasks = [(exp.raw, i, params, exp.seed, replications) for i, params in enumerate(grid)]
    if workers > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_point_star, tasks))
    else:
        outcomes = [run_point(*task) for task in tasks]

    quantiles = exp.sim.quantiles
    metric_cols = _metric_columns(quantiles)
    param_cols = [ax.path for ax in axes]
    result_cols = ["point", "rep", "n_jobs"] + param_cols + metric_cols
    agg_cols = (
        ["point", "replications"]
        + param_cols
        + [f"{c}_{stat}" for c in metric_cols for stat in ("mean", "min", "max")]
    )

    rows, agg_rows, points = [], [], []
    failures = 0
    for index, point_rows, paths, error in outcomes:
        params = grid[index]
        if error is not None:
            failures += 1
            points.append(
                {"index": index, "params": params, "status": "failure", "error": error}
            )
            continue
        first_row = len(rows)
        rows.extend(point_rows)
        agg_rows.append(_aggregate(point_rows, params, index, metric_cols))
        points.append(
            {
                "index": index,
                "params": params,
                "status": "success",
                "seed": exp.seed,
                "rng_paths": paths,
                "rows": list(range(first_row, first_row + len(point_rows))),
            }
        )

    out = exp.out_dir
    write_csv(f"{out}/results.csv", result_cols, rows, cfg_hash, exp.seed)
    write_csv(f"{out}/aggregates.csv", agg_cols, agg_rows, cfg_hash, exp.seed)
    write_json(
        f"{out}/manifest.json",
        {
            "command": "sweep",
            "axes": [{"path": ax.path, "values": list(ax.values)} for ax in axes],
            "replications": replications,
            "files": {"results": "results.csv", "aggregates": "aggregates.csv"},
            "points": points,
        },
        cfg_hash,
        exp.seed,
    )
    if failures:
        print(
            f"sweep: {failures} of {len(grid)} grid points failed; see manifest.json",
            file=sys.stderr,
        )
        for entry in points:
            if entry["status"] == "failure":
                print(f"  point {entry['index']} {entry['params']}: {entry['error']}",
                      file=sys.stderr)
        return 2
    print(f"sweep: {len(grid)} points x {replications} replications -> {out}/results.csv")
    return 0
