"""Experiment files: JSON schema, exhaustive validation, canonical hashing.

Validation never stops at the first problem; the caller gets every
violation at once, and unknown keys are violations (a typo must not
silently fall back to a default).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .model import (
    Deterministic,
    DeterministicArrivals,
    Exponential,
    HyperExponential,
    JobClass,
    OverheadConfig,
    PoissonArrivals,
    SystemConfig,
    WorkloadSpec,
    demand_per_job,
    validate,
)

COMMANDS = ("simulate", "stability", "ctmc", "bounds", "overhead", "sweep", "figure")
FIGURE_IDS = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9")

_TOP_KEYS = {
    "command", "seed", "figure", "system", "workload",
    "simulate", "sweep", "bounds", "ctmc", "overhead", "output",
}
_SYSTEM_KEYS = {"s", "mode", "skl_l", "overhead"}
_OVERHEAD_MODEL_KEYS = {"polling_interval", "rate", "injection"}
_WORKLOAD_KEYS = {"arrival_rate", "arrival_interval", "utilization", "classes"}
_CLASS_KEYS = {"weight", "barrier", "k", "service"}
_SERVICE_KEYS = {
    "exponential": {"dist", "rate"},
    "hyperexponential": {"dist", "probs", "rates"},
    "deterministic": {"dist", "value"},
}
_SIMULATE_KEYS = {"jobs", "warmup", "quantiles"}
_SWEEP_KEYS = {"axes", "replications", "workers"}
_AXIS_KEYS = {"path", "values"}
_BOUNDS_KEYS = {"epsilons", "variant", "metrics", "curve_points", "curve_tau_max"}
_CTMC_KEYS = {"dump_pi", "per_job_rates"}
_OVERHEAD_CMD_KEYS = {"samples", "points"}
_OUTPUT_KEYS = {"dir"}


@dataclass(frozen=True)
class SimOptions:
    jobs: int = 100_000
    warmup: int | None = None
    quantiles: tuple[float, ...] = (0.5, 0.9, 0.99)


@dataclass(frozen=True)
class SweepAxis:
    path: str
    values: tuple


@dataclass(frozen=True)
class SweepOptions:
    axes: tuple[SweepAxis, ...] = ()
    replications: int = 5
    workers: int | None = None


@dataclass(frozen=True)
class BoundsOptions:
    epsilons: tuple[float, ...] = (0.01,)
    variant: str = "gi"
    metrics: tuple[str, ...] = ("waiting", "sojourn")
    curve_points: int = 0
    curve_tau_max: float | None = None


@dataclass(frozen=True)
class CtmcOptions:
    dump_pi: bool = False
    per_job_rates: bool = False


@dataclass(frozen=True)
class OverheadOptions:
    samples: int = 0
    points: int = 257


@dataclass
class Experiment:
    command: str
    seed: int
    raw: dict
    system: SystemConfig | None = None
    workload: WorkloadSpec | None = None
    sim: SimOptions = field(default_factory=SimOptions)
    sweep: SweepOptions = field(default_factory=SweepOptions)
    bounds: BoundsOptions = field(default_factory=BoundsOptions)
    ctmc: CtmcOptions = field(default_factory=CtmcOptions)
    overhead: OverheadOptions = field(default_factory=OverheadOptions)
    out_dir: str = "out"
    figure: str | None = None


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(raw: dict) -> str:
    return hashlib.sha256(canonical_json(raw).encode()).hexdigest()[:16]


def _unknown(section: dict, allowed: set, where: str, errs: list):
    for key in section:
        if key not in allowed:
            errs.append(f"{where}: unknown key '{key}'")


def _want(value, types, where: str, errs: list, pred=None, note=""):
    if not isinstance(value, types) or isinstance(value, bool) and bool not in (
        types if isinstance(types, tuple) else (types,)
    ):
        errs.append(f"{where}: expected {note or types}, got {value!r}")
        return False
    if pred is not None and not pred(value):
        errs.append(f"{where}: invalid value {value!r}{' (' + note + ')' if note else ''}")
        return False
    return True


def _parse_service(node, where: str, errs: list):
    if not isinstance(node, dict):
        errs.append(f"{where}: expected an object")
        return None
    dist = node.get("dist")
    if dist not in _SERVICE_KEYS:
        errs.append(f"{where}.dist: expected one of {sorted(_SERVICE_KEYS)}, got {dist!r}")
        return None
    _unknown(node, _SERVICE_KEYS[dist], where, errs)
    if dist == "exponential":
        rate = node.get("rate")
        if _want(rate, (int, float), f"{where}.rate", errs, lambda v: v > 0, "positive"):
            return Exponential(float(rate))
        return None
    if dist == "deterministic":
        value = node.get("value")
        if _want(value, (int, float), f"{where}.value", errs, lambda v: v > 0, "positive"):
            return Deterministic(float(value))
        return None
    probs, rates = node.get("probs"), node.get("rates")
    ok = True
    for name, seq in (("probs", probs), ("rates", rates)):
        if not isinstance(seq, list) or not seq or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0 for v in seq
        ):
            errs.append(f"{where}.{name}: expected a non-empty list of positive numbers")
            ok = False
    if ok and len(probs) != len(rates):
        errs.append(f"{where}: probs and rates must have equal length")
        ok = False
    if ok and abs(sum(probs) - 1.0) > 1e-9:
        errs.append(f"{where}.probs: must sum to 1")
        ok = False
    if not ok:
        return None
    return HyperExponential(tuple(float(p) for p in probs), tuple(float(r) for r in rates))


def _parse_k(node, where: str, errs: list):
    if isinstance(node, bool):
        errs.append(f"{where}: expected integer or pmf object")
        return None
    if isinstance(node, int):
        if node < 1:
            errs.append(f"{where}: parallelism must be at least 1")
            return None
        return node
    if isinstance(node, dict) and node:
        pmf = {}
        ok = True
        for key, prob in node.items():
            try:
                kk = int(key)
            except (TypeError, ValueError):
                errs.append(f"{where}: key {key!r} is not an integer")
                ok = False
                continue
            if kk < 1 or not isinstance(prob, (int, float)) or isinstance(prob, bool) or prob < 0:
                errs.append(f"{where}[{key}]: invalid entry")
                ok = False
                continue
            pmf[kk] = float(prob)
        if ok and abs(sum(pmf.values()) - 1.0) > 1e-9:
            errs.append(f"{where}: probabilities must sum to 1")
            ok = False
        return pmf if ok else None
    errs.append(f"{where}: expected integer or pmf object")
    return None


def _parse_overhead_model(node, where: str, errs: list):
    if node is None:
        return None
    if not isinstance(node, dict):
        errs.append(f"{where}: expected an object or null")
        return None
    _unknown(node, _OVERHEAD_MODEL_KEYS, where, errs)
    p = node.get("polling_interval", 1.0)
    rate = node.get("rate")
    injection = node.get("injection", "queue_gate")
    ok = _want(p, (int, float), f"{where}.polling_interval", errs, lambda v: v > 0, "positive")
    if rate is not None:
        ok &= _want(rate, (int, float), f"{where}.rate", errs, lambda v: v >= 0, "non-negative")
    if injection not in ("queue_gate", "per_task", "per_task_queued"):
        errs.append(
            f"{where}.injection: expected one of queue_gate, per_task,"
            f" per_task_queued, got {injection!r}"
        )
        ok = False
    if not ok:
        return None
    return OverheadConfig(
        polling_interval=float(p),
        rate=None if rate is None else float(rate),
        injection=injection,
    )


def _parse_system(raw: dict, errs: list) -> SystemConfig | None:
    node = raw.get("system")
    if node is None:
        errs.append("system: section is required for this command")
        return None
    if not isinstance(node, dict):
        errs.append("system: expected an object")
        return None
    _unknown(node, _SYSTEM_KEYS, "system", errs)
    s = node.get("s")
    if not _want(s, int, "system.s", errs, lambda v: v >= 1, "at least 1"):
        return None
    mode = node.get("mode", "one_barrier")
    if mode not in ("one_barrier", "two_barrier"):
        errs.append(f"system.mode: expected one_barrier or two_barrier, got {mode!r}")
        return None
    skl_l = node.get("skl_l")
    if skl_l is not None and not _want(skl_l, int, "system.skl_l", errs, lambda v: v >= 1, "at least 1"):
        return None
    n_errs = len(errs)
    overhead = _parse_overhead_model(node.get("overhead"), "system.overhead", errs)
    if len(errs) > n_errs:
        return None
    return SystemConfig(s=s, mode=mode, skl_l=skl_l, overhead=overhead)


def _parse_workload(raw: dict, system: SystemConfig | None, errs: list) -> WorkloadSpec | None:
    node = raw.get("workload")
    if node is None:
        errs.append("workload: section is required for this command")
        return None
    if not isinstance(node, dict):
        errs.append("workload: expected an object")
        return None
    _unknown(node, _WORKLOAD_KEYS, "workload", errs)

    classes_node = node.get("classes")
    classes = []
    if not isinstance(classes_node, list) or not classes_node:
        errs.append("workload.classes: expected a non-empty list")
    else:
        for i, cnode in enumerate(classes_node):
            where = f"workload.classes[{i}]"
            if not isinstance(cnode, dict):
                errs.append(f"{where}: expected an object")
                continue
            _unknown(cnode, _CLASS_KEYS, where, errs)
            weight = cnode.get("weight", 1.0)
            barrier = cnode.get("barrier", True)
            weight_ok = _want(
                weight, (int, float), f"{where}.weight", errs, lambda v: v > 0, "positive"
            )
            if not isinstance(barrier, bool):
                errs.append(f"{where}.barrier: expected true or false")
            k = _parse_k(cnode.get("k"), f"{where}.k", errs)
            service = _parse_service(cnode.get("service"), f"{where}.service", errs)
            if weight_ok and k is not None and service is not None and isinstance(barrier, bool):
                classes.append(
                    JobClass(weight=float(weight), barrier=barrier, k=k, service=service)
                )

    rate_keys = [key for key in ("arrival_rate", "arrival_interval", "utilization") if key in node]
    if len(rate_keys) != 1:
        errs.append(
            "workload: exactly one of arrival_rate, arrival_interval,"
            f" utilization is required, got {rate_keys or 'none'}"
        )
        return None
    value = node[rate_keys[0]]
    if not _want(value, (int, float), f"workload.{rate_keys[0]}", errs, lambda v: v > 0, "positive"):
        return None
    if len(classes) != len(classes_node or []):
        return None

    if rate_keys[0] == "arrival_interval":
        arrivals = DeterministicArrivals(float(value))
    elif rate_keys[0] == "arrival_rate":
        arrivals = PoissonArrivals(float(value))
    else:
        if system is None:
            errs.append("workload.utilization: needs a valid system section to resolve")
            return None
        probe = WorkloadSpec(arrivals=PoissonArrivals(1.0), classes=tuple(classes))
        demand = demand_per_job(system, probe)
        arrivals = PoissonArrivals(float(value) * system.s / demand)
    return WorkloadSpec(arrivals=arrivals, classes=tuple(classes))


def _parse_sim(raw: dict, errs: list) -> SimOptions:
    node = raw.get("simulate")
    if node is None:
        return SimOptions()
    if not isinstance(node, dict):
        errs.append("simulate: expected an object")
        return SimOptions()
    _unknown(node, _SIMULATE_KEYS, "simulate", errs)
    jobs = node.get("jobs", 100_000)
    warmup = node.get("warmup")
    quantiles = node.get("quantiles", [0.5, 0.9, 0.99])
    _want(jobs, int, "simulate.jobs", errs, lambda v: v >= 1, "at least 1")
    if warmup is not None:
        _want(warmup, int, "simulate.warmup", errs, lambda v: v >= 0, "non-negative")
    if not isinstance(quantiles, list) or not all(
        isinstance(q, float) and 0 < q <= 1 for q in quantiles
    ):
        errs.append("simulate.quantiles: expected a list of floats in (0, 1]")
        quantiles = [0.5, 0.9, 0.99]
    return SimOptions(jobs=jobs, warmup=warmup, quantiles=tuple(quantiles))


def _parse_sweep(raw: dict, errs: list) -> SweepOptions:
    node = raw.get("sweep")
    if node is None:
        return SweepOptions()
    if not isinstance(node, dict):
        errs.append("sweep: expected an object")
        return SweepOptions()
    _unknown(node, _SWEEP_KEYS, "sweep", errs)
    axes_node = node.get("axes", [])
    axes = []
    if not isinstance(axes_node, list):
        errs.append("sweep.axes: expected a list")
        axes_node = []
    for i, axis in enumerate(axes_node):
        where = f"sweep.axes[{i}]"
        if not isinstance(axis, dict):
            errs.append(f"{where}: expected an object")
            continue
        _unknown(axis, _AXIS_KEYS, where, errs)
        path, values = axis.get("path"), axis.get("values")
        if not isinstance(path, str) or not path:
            errs.append(f"{where}.path: expected a parameter path string")
            continue
        if not isinstance(values, list) or not values:
            errs.append(f"{where}.values: expected a non-empty list")
            continue
        axes.append(SweepAxis(path=path, values=tuple(values)))
    replications = node.get("replications", 5)
    workers = node.get("workers")
    _want(replications, int, "sweep.replications", errs, lambda v: v >= 1, "at least 1")
    if workers is not None:
        _want(workers, int, "sweep.workers", errs, lambda v: v >= 1, "at least 1")
    return SweepOptions(axes=tuple(axes), replications=replications, workers=workers)


def _parse_bounds(raw: dict, errs: list) -> BoundsOptions:
    node = raw.get("bounds")
    if node is None:
        return BoundsOptions()
    if not isinstance(node, dict):
        errs.append("bounds: expected an object")
        return BoundsOptions()
    _unknown(node, _BOUNDS_KEYS, "bounds", errs)
    eps = node.get("epsilons", [0.01])
    variant = node.get("variant", "gi")
    metrics = node.get("metrics", ["waiting", "sojourn"])
    curve_points = node.get("curve_points", 0)
    curve_tau_max = node.get("curve_tau_max")
    if not isinstance(eps, list) or not eps or not all(
        isinstance(e, float) and 0 < e < 1 for e in eps
    ):
        errs.append("bounds.epsilons: expected a list of floats in (0, 1)")
        eps = [0.01]
    if variant not in ("gi", "g"):
        errs.append(f"bounds.variant: expected gi or g, got {variant!r}")
        variant = "gi"
    if not isinstance(metrics, list) or not metrics or not all(
        m in ("waiting", "sojourn") for m in metrics
    ):
        errs.append("bounds.metrics: expected a list drawn from waiting, sojourn")
        metrics = ["waiting", "sojourn"]
    _want(curve_points, int, "bounds.curve_points", errs, lambda v: v >= 0, "non-negative")
    if curve_tau_max is not None:
        _want(curve_tau_max, (int, float), "bounds.curve_tau_max", errs, lambda v: v > 0, "positive")
    return BoundsOptions(
        epsilons=tuple(eps),
        variant=variant,
        metrics=tuple(metrics),
        curve_points=curve_points,
        curve_tau_max=None if curve_tau_max is None else float(curve_tau_max),
    )


def _parse_ctmc(raw: dict, errs: list) -> CtmcOptions:
    node = raw.get("ctmc")
    if node is None:
        return CtmcOptions()
    if not isinstance(node, dict):
        errs.append("ctmc: expected an object")
        return CtmcOptions()
    _unknown(node, _CTMC_KEYS, "ctmc", errs)
    dump_pi = node.get("dump_pi", False)
    per_job = node.get("per_job_rates", False)
    for name, val in (("dump_pi", dump_pi), ("per_job_rates", per_job)):
        if not isinstance(val, bool):
            errs.append(f"ctmc.{name}: expected true or false")
    return CtmcOptions(dump_pi=bool(dump_pi), per_job_rates=bool(per_job))


def _parse_overhead_cmd(raw: dict, errs: list) -> OverheadOptions:
    node = raw.get("overhead")
    if node is None:
        return OverheadOptions()
    if not isinstance(node, dict):
        errs.append("overhead: expected an object")
        return OverheadOptions()
    _unknown(node, _OVERHEAD_CMD_KEYS, "overhead", errs)
    samples = node.get("samples", 0)
    points = node.get("points", 257)
    _want(samples, int, "overhead.samples", errs, lambda v: v >= 0, "non-negative")
    _want(points, int, "overhead.points", errs, lambda v: v >= 2, "at least 2")
    return OverheadOptions(samples=samples, points=points)


def parse_config(raw: dict) -> tuple[Experiment | None, list[str]]:
    """Build a validated experiment from a decoded JSON document.

    Returns (experiment, []) on success or (None, all_errors) on any
    violation.
    """
    errs: list[str] = []
    if not isinstance(raw, dict):
        return None, ["config: expected a JSON object"]
    _unknown(raw, _TOP_KEYS, "config", errs)

    command = raw.get("command")
    if command not in COMMANDS:
        errs.append(f"command: expected one of {', '.join(COMMANDS)}, got {command!r}")
        return None, errs

    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        errs.append(f"seed: expected a non-negative integer, got {seed!r}")
        seed = 0

    figure = raw.get("figure")
    if command == "figure":
        if figure not in FIGURE_IDS:
            errs.append(f"figure: expected one of {', '.join(FIGURE_IDS)}, got {figure!r}")
    elif figure is not None:
        errs.append("figure: only valid with command 'figure'")

    needs_system = command in ("simulate", "stability", "ctmc", "bounds", "overhead", "sweep")
    needs_workload = command in ("simulate", "stability", "ctmc", "bounds", "sweep")

    system = _parse_system(raw, errs) if needs_system else None
    workload = _parse_workload(raw, system, errs) if needs_workload else None
    if not needs_workload and "workload" in raw:
        workload = _parse_workload(raw, system, errs)

    if system is not None and workload is not None:
        errs.extend(validate(system, workload))

    if command == "ctmc" and system is not None:
        if system.skl_l is None:
            errs.append("system.skl_l: required for the ctmc command")
        if system.mode.value != "one_barrier":
            errs.append("system.mode: ctmc command analyzes one_barrier systems")
    if command in ("stability", "ctmc") and workload is not None:
        shaped = (
            len(workload.classes) == 1
            and workload.classes[0].fixed_k is not None
            and isinstance(workload.classes[0].service, Exponential)
        )
        if not shaped:
            errs.append(
                f"workload: the {command} command needs a single class with"
                " fixed parallelism and exponential service"
            )
    if command == "bounds":
        if workload is not None:
            rates = set()
            for i, c in enumerate(workload.classes):
                if isinstance(c.service, Exponential):
                    rates.add(c.service.rate)
                else:
                    errs.append(
                        f"workload.classes[{i}].service: bounds require exponential service"
                    )
            if len(rates) > 1:
                errs.append(
                    "workload.classes: bounds require one exponential rate shared by all classes"
                )
            if not isinstance(workload.arrivals, PoissonArrivals):
                errs.append("workload: bounds require Poisson arrivals")
        if system is not None:
            if system.mode.value != "one_barrier":
                errs.append("system.mode: bounds cover one_barrier systems")
            if system.skl_l is not None:
                errs.append("system.skl_l: bounds do not model straggler preemption")
    if command == "overhead" and system is not None:
        if system.overhead is None:
            errs.append("system.overhead: required for the overhead command")
        elif system.overhead.rate is None and workload is None:
            errs.append(
                "system.overhead.rate: required when no workload provides an arrival rate"
            )
    if command == "sweep" and not raw.get("sweep", {}).get("axes"):
        errs.append("sweep.axes: at least one axis is required for the sweep command")

    sim = _parse_sim(raw, errs)
    sweep = _parse_sweep(raw, errs)
    bounds = _parse_bounds(raw, errs)
    ctmc = _parse_ctmc(raw, errs)
    overhead = _parse_overhead_cmd(raw, errs)

    out_node = raw.get("output", {})
    out_dir = "out"
    if not isinstance(out_node, dict):
        errs.append("output: expected an object")
    else:
        _unknown(out_node, _OUTPUT_KEYS, "output", errs)
        out_dir = out_node.get("dir", "out")
        if not isinstance(out_dir, str) or not out_dir:
            errs.append("output.dir: expected a non-empty path string")
            out_dir = "out"

    if errs:
        return None, errs
    return (
        Experiment(
            command=command,
            seed=seed,
            raw=raw,
            system=system,
            workload=workload,
            sim=sim,
            sweep=sweep,
            bounds=bounds,
            ctmc=ctmc,
            overhead=overhead,
            out_dir=out_dir,
            figure=figure,
        ),
        [],
    )


def load_config(path: str) -> tuple[Experiment | None, list[str]]:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        return None, [f"config file not found: {path}"]
    except json.JSONDecodeError as exc:
        return None, [f"config file is not valid JSON: {exc}"]
    return parse_config(raw)


def set_by_path(raw: dict, path: str, value) -> None:
    """Patch a dotted parameter path into a decoded config document.
    Numeric components index into lists."""
    parts = path.split(".")
    node = raw
    for part in parts[:-1]:
        key = int(part) if isinstance(node, list) else part
        node = node[key]
    last = parts[-1]
    key = int(last) if isinstance(node, list) else last
    node[key] = value
