"""Scaling sweeps over graph size: trial orchestration, CSV rows, and fits.

A sweep samples one graph per (n, trial), measures the requested quantities
on its center component, and appends one CSV row per trial.  Trial seeds
derive from (master seed, n, trial index) so results never depend on worker
count or execution order.  fit_scaling then checks measured quantities
against candidate growth laws.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from hyperwalk.flows import energy, st_flow
from hyperwalk.geometry import InvalidArgument, ModelParams
from hyperwalk.hrg import (
    HrgGraph,
    build_graph_bucketed,
    center_subgraph,
    sample_points,
)
from hyperwalk.resistance import kirchhoff_and_average
from hyperwalk.rng import make_generator
from hyperwalk.tiling import (
    DEFAULT_C_FAULT,
    DEFAULT_CPRIME,
    OccupancyReport,
    TilingSpec,
    build_tiling,
    classify_occupancy,
    locate_many,
)
from hyperwalk.walks import (
    WalkConfig,
    find_dangling_paths,
    max_hitting_estimate,
    simulate_cover,
    target_time,
)

QUANTITIES = ("thit", "tcov", "ttarget", "kirchhoff", "avg_resist",
              "flow_energy", "dangling", "degree")

CSV_COLUMNS = ("n", "seed", "V", "Vc", "Ec", "mean_deg", "thit_est",
               "tcov_mean", "tcov_se", "ttarget", "ttarget_se",
               "kirchhoff_est", "avg_resist", "avg_resist_ci",
               "flow_energy_med", "dangling_count", "dangling_maxlen",
               "t_sample_s", "t_build_s", "t_solve_s", "t_walk_s")

_INT_COLUMNS = {"n", "seed", "V", "Vc", "Ec", "dangling_count", "dangling_maxlen"}


@dataclass(frozen=True)
class ExperimentConfig:
    n_values: tuple[int, ...]
    alpha: float = 0.7
    nu: float = 1.0
    seeds_per_n: int = 1
    quantities: tuple[str, ...] = QUANTITIES
    master_seed: int = 0
    mc_reps: int = 20
    num_pairs: int = 1000
    num_targets: int = 200
    num_flow_pairs: int = 20
    tiling_c: float = 0.5
    fault_C: float = DEFAULT_C_FAULT
    fault_Cprime: float = DEFAULT_CPRIME
    omega: float | None = None
    workers: int = 1
    record_timings: bool = True
    output: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(self, "quantities", tuple(self.quantities))
        if not self.n_values:
            raise InvalidArgument("n_values must be nonempty")
        if any(b <= a for a, b in zip(self.n_values, self.n_values[1:])):
            raise InvalidArgument(f"n_values must be increasing, got {self.n_values}")
        if self.n_values[0] < 1:
            raise InvalidArgument("n_values must be positive")
        unknown = set(self.quantities) - set(QUANTITIES)
        if unknown:
            raise InvalidArgument(f"unknown quantities {sorted(unknown)}")
        for name in ("seeds_per_n", "mc_reps", "num_pairs", "num_targets",
                     "num_flow_pairs", "workers"):
            if getattr(self, name) < 1:
                raise InvalidArgument(f"{name} must be >= 1")


@dataclass(frozen=True)
class ExperimentRow:
    """One trial.  Quantity fields are None when not requested or failed;
    errors lists the reasons for anything that failed."""

    n: int
    seed: int
    V: int | None = None
    Vc: int | None = None
    Ec: int | None = None
    mean_deg: float | None = None
    thit_est: float | None = None
    tcov_mean: float | None = None
    tcov_se: float | None = None
    ttarget: float | None = None
    ttarget_se: float | None = None
    kirchhoff_est: float | None = None
    avg_resist: float | None = None
    avg_resist_ci: float | None = None
    flow_energy_med: float | None = None
    dangling_count: int | None = None
    dangling_maxlen: int | None = None
    t_sample_s: float | None = None
    t_build_s: float | None = None
    t_solve_s: float | None = None
    t_walk_s: float | None = None
    errors: tuple[str, ...] = ()


def format_float(x: float) -> str:
    """17 significant digits, the round-trip precision for binary64."""
    return format(float(x), ".17g")


def _cell(row: ExperimentRow, col: str) -> str:
    val = getattr(row, col)
    if val is None:
        return "nan"
    if col in _INT_COLUMNS:
        return str(int(val))
    return format_float(val)


def rows_to_csv(rows: list[ExperimentRow]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    lines.extend(",".join(_cell(r, c) for c in CSV_COLUMNS) for r in rows)
    return "\n".join(lines) + "\n"


def rows_from_csv(text: str) -> list[ExperimentRow]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].split(",") != list(CSV_COLUMNS):
        raise InvalidArgument("CSV header does not match the experiment schema")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(CSV_COLUMNS):
            raise InvalidArgument(f"row has {len(parts)} cells: {ln!r}")
        kwargs = {}
        for col, cell in zip(CSV_COLUMNS, parts):
            if cell == "nan":
                kwargs[col] = None
            elif col in _INT_COLUMNS:
                kwargs[col] = int(cell)
            else:
                kwargs[col] = float(cell)
        rows.append(ExperimentRow(**kwargs))
    return rows


def _derive_seed(*keys: int) -> int:
    return int(make_generator(*keys).integers(0, 2**62))


def robust_vertices(g: HrgGraph, spec: TilingSpec, report: OccupancyReport,
                    radius: float) -> np.ndarray:
    """Vertex ids within the given radius whose containing tile is robust."""
    r, theta = g.points.r, g.points.theta
    levels, idxs, _ = locate_many(r, theta, spec)
    ok = np.zeros(r.shape[0], dtype=bool)
    for lev in np.unique(levels):
        mask = levels == lev
        ok[mask] = report.robust[lev][idxs[mask]]
    return np.flatnonzero(ok & (r <= radius))


def _median_flow_energy(cfg: ExperimentConfig, center: HrgGraph,
                        pair_seed: int) -> float:
    spec = build_tiling(center.params, cfg.tiling_c)
    report = classify_occupancy(center, spec, cfg.fault_C, cfg.fault_Cprime)
    cands = robust_vertices(center, spec, report, report.rho_prime)
    if cands.shape[0] < 2:
        raise InvalidArgument("fewer than two vertices in robust tiles")
    rng = make_generator(pair_seed)
    energies = []
    for _ in range(cfg.num_flow_pairs):
        s, t = (int(v) for v in rng.choice(cands, size=2, replace=False))
        energies.append(energy(st_flow(center, spec, s, t)))
    return float(np.median(energies))


def _run_trial(cfg: ExperimentConfig, n: int, trial: int) -> ExperimentRow:
    seed = _derive_seed(cfg.master_seed, n, trial)
    params = ModelParams(alpha=cfg.alpha, nu=cfg.nu, n=n)
    quantities = set(cfg.quantities)
    errors: list[str] = []
    vals: dict[str, float | int | None] = {}

    t0 = time.perf_counter()
    try:
        points = sample_points(params, "poissonized", seed)
        vals["V"] = len(points)
        t1 = time.perf_counter()
        vals["t_sample_s"] = t1 - t0
        graph = build_graph_bucketed(points)
        center, _ = center_subgraph(graph)
        vals["Vc"] = center.num_vertices
        vals["Ec"] = center.indices.shape[0] // 2
        vals["mean_deg"] = float(graph.degrees.mean()) if len(points) else None
        t2 = time.perf_counter()
        vals["t_build_s"] = t2 - t1
    except Exception as e:  # a dead trial still yields a row
        errors.append(f"build: {e}")
        return _finish_row(cfg, n, seed, vals, errors)

    t_solve = 0.0
    t_walk = 0.0

    def timed(tag, fn):
        start = time.perf_counter()
        try:
            fn()
        except Exception as e:
            errors.append(f"{tag}: {e}")
        t_solve_local = time.perf_counter() - start
        return t_solve_local

    if "ttarget" in quantities:
        def _ttarget():
            est = target_time(center, num_targets=cfg.num_targets,
                              seed=_derive_seed(seed, 1))
            vals["ttarget"] = est.value
            vals["ttarget_se"] = est.ci_halfwidth / 1.96
        t_solve += timed("ttarget", _ttarget)

    if "thit" in quantities:
        def _thit():
            vals["thit_est"] = max_hitting_estimate(center).value
        t_solve += timed("thit", _thit)

    if quantities & {"kirchhoff", "avg_resist"}:
        def _kirch():
            res = kirchhoff_and_average(center, num_pairs=cfg.num_pairs,
                                        seed=_derive_seed(seed, 2))
            vals["kirchhoff_est"] = res.kirchhoff
            vals["avg_resist"] = res.average
            vals["avg_resist_ci"] = res.ci_halfwidth
        t_solve += timed("resist", _kirch)

    if "flow_energy" in quantities:
        def _flow():
            vals["flow_energy_med"] = _median_flow_energy(cfg, center,
                                                          _derive_seed(seed, 3))
        t_solve += timed("flow_energy", _flow)

    if "dangling" in quantities:
        def _dangling():
            paths = find_dangling_paths(center)
            vals["dangling_count"] = len(paths)
            vals["dangling_maxlen"] = max((len(p) for p in paths), default=0)
        t_solve += timed("dangling", _dangling)

    if "tcov" in quantities:
        start = time.perf_counter()
        try:
            walk_start = int(center.degrees.argmax())
            est = simulate_cover(center, walk_start,
                                 WalkConfig(seed=_derive_seed(seed, 4),
                                            repetitions=cfg.mc_reps))
            vals["tcov_mean"] = est.mean
            vals["tcov_se"] = est.stderr
        except Exception as e:
            errors.append(f"tcov: {e}")
        t_walk += time.perf_counter() - start

    vals["t_solve_s"] = t_solve
    vals["t_walk_s"] = t_walk
    return _finish_row(cfg, n, seed, vals, errors)


def _finish_row(cfg: ExperimentConfig, n: int, seed: int,
                vals: dict, errors: list[str]) -> ExperimentRow:
    if not cfg.record_timings:
        for col in ("t_sample_s", "t_build_s", "t_solve_s", "t_walk_s"):
            vals[col] = None
    known = {f.name for f in fields(ExperimentRow)}
    vals = {k: v for k, v in vals.items() if k in known}
    return ExperimentRow(n=n, seed=seed, errors=tuple(errors), **vals)


def effective_workers(requested: int) -> int:
    cap = os.environ.get("HYPERWALK_THREADS")
    if cap is not None:
        return max(1, min(requested, int(cap)))
    return max(1, requested)


def run_experiment(cfg: ExperimentConfig) -> list[ExperimentRow]:
    trials = [(n, t) for n in cfg.n_values for t in range(cfg.seeds_per_n)]
    workers = effective_workers(cfg.workers)
    if workers == 1:
        rows = [_run_trial(cfg, n, t) for n, t in trials]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda nt: _run_trial(cfg, *nt), trials))
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(rows_to_csv(rows))
    return rows


# --- config files: plain key=value lines, CLI overrides win ---------------

_CONFIG_KEYS = {f.name for f in fields(ExperimentConfig)}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key == "n_values":
        return tuple(int(x) for x in raw.split(",") if x.strip())
    if key == "quantities":
        return tuple(x.strip() for x in raw.split(",") if x.strip())
    if key in ("alpha", "nu", "tiling_c", "fault_C", "fault_Cprime", "omega"):
        return None if raw.lower() == "none" else float(raw)
    if key in ("seeds_per_n", "master_seed", "mc_reps", "num_pairs",
               "num_targets", "num_flow_pairs", "workers"):
        return int(raw)
    if key == "record_timings":
        if raw.lower() not in ("true", "false", "0", "1"):
            raise InvalidArgument(f"record_timings must be boolean, got {raw!r}")
        return raw.lower() in ("true", "1")
    if key == "output":
        return raw or None
    raise InvalidArgument(f"unknown config key {key!r}")


def parse_config(text: str, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """key=value lines ('#' comments) merged with overrides, overrides winning."""
    items: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgument(f"config line {lineno} is not key=value: {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _CONFIG_KEYS or key == "errors":
            raise InvalidArgument(f"unknown config key {key!r} (line {lineno})")
        items[key] = _parse_value(key, raw)
    for key, raw in (overrides or {}).items():
        if key not in _CONFIG_KEYS:
            raise InvalidArgument(f"unknown config key {key!r}")
        items[key] = _parse_value(key, raw) if isinstance(raw, str) else raw
    if "n_values" not in items:
        raise InvalidArgument("config must set n_values")
    return ExperimentConfig(**items)


# --- scaling-law fits ------------------------------------------------------

_MODELS = {
    "n": lambda n: n,
    "nlogn": lambda n: n * math.log(n),
    "nlog2n": lambda n: n * math.log(n) ** 2,
    "n2": lambda n: float(n) * n,
}

_QUANTITY_COLUMN = {
    "thit": "thit_est",
    "tcov": "tcov_mean",
    "ttarget": "ttarget",
    "kirchhoff": "kirchhoff_est",
    "avg_resist": "avg_resist",
    "flow_energy": "flow_energy_med",
    "dangling": "dangling_count",
    "degree": "mean_deg",
}


@dataclass(frozen=True)
class ScalingFit:
    """Per-n means of quantity/model plus a log-log slope with its stderr."""

    band: float
    exponent: float
    exponent_stderr: float
    per_n: tuple[tuple[int, float], ...]


def fit_scaling(rows: list[ExperimentRow], quantity: str, model: str) -> ScalingFit:
    if quantity not in _QUANTITY_COLUMN:
        raise InvalidArgument(f"unknown quantity {quantity!r}")
    if model not in _MODELS:
        raise InvalidArgument(f"unknown model {model!r}; pick from {sorted(_MODELS)}")
    col = _QUANTITY_COLUMN[quantity]
    by_n: dict[int, list[float]] = {}
    for row in rows:
        val = getattr(row, col)
        if val is not None and math.isfinite(val):
            by_n.setdefault(row.n, []).append(float(val))
    if len(by_n) < 3:
        raise InvalidArgument(
            f"need >= 3 distinct n with data for {quantity}, have {len(by_n)}")
    ns = sorted(by_n)
    means = np.array([np.mean(by_n[n]) for n in ns], dtype=float)
    if (means <= 0).any():
        raise InvalidArgument(f"{quantity} means must be positive to fit")
    scaled = means / np.array([_MODELS[model](n) for n in ns])
    band = float(scaled.max() / scaled.min())
    logn = np.log(np.array(ns, dtype=float))
    logq = np.log(means)
    slope, intercept = np.polyfit(logn, logq, 1)
    resid = logq - (slope * logn + intercept)
    dof = len(ns) - 2
    sigma2 = float(resid @ resid) / dof if dof > 0 else 0.0
    stderr = math.sqrt(sigma2 / float(((logn - logn.mean()) ** 2).sum()))
    return ScalingFit(band, float(slope), stderr,
                      tuple((n, float(m)) for n, m in zip(ns, means)))


def with_output(cfg: ExperimentConfig, path: str | None) -> ExperimentConfig:
    return replace(cfg, output=path)
