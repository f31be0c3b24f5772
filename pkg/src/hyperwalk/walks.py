"""Random walks on unweighted graphs: Monte Carlo simulation and exact solves.

Monte Carlo estimators run simple (non-lazy) walks with numba kernels fed
by chunked Philox uniforms; every repetition gets its own derived seed so
results are reproducible regardless of execution order.  Exact quantities
come from reduced Laplacian systems (hitting vectors) or one pseudoinverse
(all-pairs hitting), with residual checks on every solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.linalg import cho_factor, cho_solve
from scipy.sparse import diags
from scipy.sparse.linalg import splu

from hyperwalk.geometry import InvalidArgument
from hyperwalk.hrg import HrgGraph
from hyperwalk.resistance import (
    DisconnectedPair,
    _component_info,
    effective_resistance,
    resistance_matrix,
)
from hyperwalk.rng import make_generator

DEFAULT_STEP_CAP = 10**9
EXACT_HITTING_CAP = 50_000
EXACT_TARGET_CAP = 2_000
MAX_HITTING_EXACT_CUTOFF = 500
SOLVE_TOL = 1e-10

# uniforms per kernel call start small and grow geometrically, so short
# walks on small graphs do not pay for full-size chunks
_CHUNK_MIN = 128
_CHUNK = 1 << 16
_TAG_HIT = 0
_TAG_COVER = 1
_TAG_COMMUTE = 2


@dataclass(frozen=True)
class WalkConfig:
    """Knobs shared by all Monte Carlo walk estimators."""

    seed: int
    repetitions: int = 1
    max_steps: int = DEFAULT_STEP_CAP

    def __post_init__(self):
        if self.repetitions < 1:
            raise InvalidArgument(f"repetitions must be >= 1, got {self.repetitions}")
        if self.max_steps < 1:
            raise InvalidArgument(f"max_steps must be >= 1, got {self.max_steps}")


@dataclass(frozen=True)
class WalkEstimate:
    """Sample mean, standard error, and the per-repetition step counts."""

    mean: float
    stderr: float
    samples: tuple[float, ...]


class StepCapExceeded(RuntimeError):
    """A repetition ran into the step cap.

    Breached repetitions are never folded into the mean; the estimate over
    the repetitions that did finish rides along for post-mortems.
    """

    def __init__(self, op: str, cap: int, capped: int, completed: tuple[float, ...]):
        self.op = op
        self.cap = cap
        self.capped = capped
        self.completed = completed
        super().__init__(
            f"{op}: {capped} repetition(s) hit the {cap}-step cap "
            f"({len(completed)} completed)"
        )


def _num_edges(g: HrgGraph) -> int:
    return g.indices.shape[0] // 2


def _check_vertex(g: HrgGraph, v: int, name: str) -> None:
    if not 0 <= v < g.num_vertices:
        raise InvalidArgument(f"{name}={v} out of range for {g.num_vertices} vertices")


def _require_connected(g: HrgGraph, op: str) -> None:
    if g.num_vertices == 0:
        raise InvalidArgument(f"{op}: empty graph")
    if _component_info(g).num_components != 1:
        raise InvalidArgument(f"{op}: graph must be connected")


def stationary_distribution(g: HrgGraph) -> np.ndarray:
    """pi = degree / 2|E| on a connected graph; a lone vertex gets mass 1."""
    _require_connected(g, "stationary_distribution")
    if g.num_vertices == 1:
        return np.ones(1)
    pi = g.degrees.astype(np.float64) / float(g.indices.shape[0])
    assert abs(pi.sum() - 1.0) < 1e-12
    return pi


# Kernels return (state..., status, used) with status 0 = uniforms exhausted,
# 1 = done, 2 = step cap reached.  Wrappers loop over fresh chunks.

@njit(cache=True, nogil=True)
def _hit_chunk(indptr, indices, cur, target, steps, cap, unif):
    for i in range(unif.shape[0]):
        if steps >= cap:
            return cur, steps, 2, i
        lo = indptr[cur]
        deg = indptr[cur + 1] - lo
        cur = indices[lo + int(unif[i] * deg)]
        steps += 1
        if cur == target:
            return cur, steps, 1, i + 1
    return cur, steps, 0, unif.shape[0]


@njit(cache=True, nogil=True)
def _cover_chunk(indptr, indices, cur, visited, remaining, steps, cap, unif):
    for i in range(unif.shape[0]):
        if steps >= cap:
            return cur, remaining, steps, 2, i
        lo = indptr[cur]
        deg = indptr[cur + 1] - lo
        cur = indices[lo + int(unif[i] * deg)]
        steps += 1
        if not visited[cur]:
            visited[cur] = True
            remaining -= 1
            if remaining == 0:
                return cur, remaining, steps, 1, i + 1
    return cur, remaining, steps, 0, unif.shape[0]


def _hit_once(g: HrgGraph, start: int, target: int, steps: int, cap: int,
              rng: np.random.Generator) -> tuple[int, bool]:
    """Walk from start until target; returns (total steps, capped)."""
    cur = start
    chunk = _CHUNK_MIN
    while True:
        cur, steps, status, _ = _hit_chunk(
            g.indptr, g.indices, cur, target, steps, cap, rng.random(chunk))
        if status == 1:
            return steps, False
        if status == 2:
            return steps, True
        chunk = min(chunk * 8, _CHUNK)


def _aggregate(op: str, cfg: WalkConfig, samples: list[float],
               capped: int) -> WalkEstimate:
    done = tuple(samples)
    if capped:
        raise StepCapExceeded(op, cfg.max_steps, capped, done)
    arr = np.asarray(done)
    stderr = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    return WalkEstimate(float(arr.mean()), stderr, done)


def simulate_hitting(g: HrgGraph, start: int, target: int,
                     config: WalkConfig) -> WalkEstimate:
    """Monte Carlo E_start[time to reach target] over config.repetitions walks."""
    _check_vertex(g, start, "start")
    _check_vertex(g, target, "target")
    info = _component_info(g)
    if info.labels[start] != info.labels[target]:
        raise DisconnectedPair(f"no path from {start} to {target}")
    if start == target:
        return WalkEstimate(0.0, 0.0, (0.0,) * config.repetitions)
    samples: list[float] = []
    capped = 0
    for rep in range(config.repetitions):
        rng = make_generator(config.seed, _TAG_HIT, rep)
        steps, hit_cap = _hit_once(g, start, target, 0, config.max_steps, rng)
        if hit_cap:
            capped += 1
        else:
            samples.append(float(steps))
    return _aggregate("simulate_hitting", config, samples, capped)


def simulate_commute(g: HrgGraph, u: int, v: int, config: WalkConfig) -> WalkEstimate:
    """Monte Carlo E[time u -> v -> u]; both legs share one step budget."""
    _check_vertex(g, u, "u")
    _check_vertex(g, v, "v")
    info = _component_info(g)
    if info.labels[u] != info.labels[v]:
        raise DisconnectedPair(f"no path from {u} to {v}")
    if u == v:
        return WalkEstimate(0.0, 0.0, (0.0,) * config.repetitions)
    samples: list[float] = []
    capped = 0
    for rep in range(config.repetitions):
        rng = make_generator(config.seed, _TAG_COMMUTE, rep)
        steps, hit_cap = _hit_once(g, u, v, 0, config.max_steps, rng)
        if not hit_cap:
            steps, hit_cap = _hit_once(g, v, u, steps, config.max_steps, rng)
        if hit_cap:
            capped += 1
        else:
            samples.append(float(steps))
    return _aggregate("simulate_commute", config, samples, capped)


def simulate_cover(g: HrgGraph, start: int, config: WalkConfig) -> WalkEstimate:
    """Monte Carlo cover time from start on a connected graph."""
    _check_vertex(g, start, "start")
    _require_connected(g, "simulate_cover")
    n = g.num_vertices
    if n == 1:
        return WalkEstimate(0.0, 0.0, (0.0,) * config.repetitions)
    samples: list[float] = []
    capped = 0
    for rep in range(config.repetitions):
        rng = make_generator(config.seed, _TAG_COVER, rep)
        visited = np.zeros(n, dtype=np.bool_)
        visited[start] = True
        cur, remaining, steps = start, n - 1, 0
        chunk = _CHUNK_MIN
        while True:
            cur, remaining, steps, status, _ = _cover_chunk(
                g.indptr, g.indices, cur, visited, remaining, steps,
                config.max_steps, rng.random(chunk))
            if status:
                break
            chunk = min(chunk * 8, _CHUNK)
        if status == 2:
            capped += 1
        else:
            samples.append(float(steps))
    return _aggregate("simulate_cover", config, samples, capped)


def exact_hitting_vector(g: HrgGraph, target: int,
                         cap: int = EXACT_HITTING_CAP) -> np.ndarray:
    """h[u] = E_u[time to reach target], from the reduced Laplacian system.

    Solves (L restricted to V minus target) h = degree vector; dense Cholesky
    for small graphs, sparse LU above that.  The normwise backward error
    must come out below SOLVE_TOL or the solve is rejected outright.
    """
    _check_vertex(g, target, "target")
    _require_connected(g, "exact_hitting_vector")
    n = g.num_vertices
    if n > cap:
        raise InvalidArgument(f"exact_hitting_vector: {n} vertices exceeds cap {cap}")
    if n == 1:
        return np.zeros(1)
    deg = g.degrees.astype(np.float64)
    keep = np.arange(n) != target
    lred = (diags(deg) - g.adjacency()).tocsr()[keep][:, keep]
    rhs = deg[keep]
    if n <= 500:
        sol = cho_solve(cho_factor(lred.toarray()), rhs)
    else:
        lu = splu(lred.tocsc())
        sol = lu.solve(rhs)
        sol += lu.solve(rhs - lred @ sol)
    # backward error, not plain relative residual: hitting times dwarf the
    # degree rhs, so ||Ax - b|| / ||b|| bottoms out near eps * ||x|| / ||b||
    norm_a = float(np.abs(lred).sum(axis=1).max())
    denom = norm_a * np.linalg.norm(sol) + np.linalg.norm(rhs)
    resid = np.linalg.norm(lred @ sol - rhs) / denom
    assert resid <= SOLVE_TOL, f"hitting solve residual {resid:.3e}"
    h = np.zeros(n)
    h[keep] = sol
    return h


def hitting_time_matrix(g: HrgGraph, cap: int = MAX_HITTING_EXACT_CUTOFF) -> np.ndarray:
    """All-pairs H[u, v] = E_u[time to v] from one Laplacian pseudoinverse."""
    _require_connected(g, "hitting_time_matrix")
    n = g.num_vertices
    if n > cap:
        raise InvalidArgument(f"hitting_time_matrix: {n} vertices exceeds cap {cap}")
    if n == 1:
        return np.zeros((1, 1))
    deg = g.degrees.astype(np.float64)
    lap = np.diag(deg) - g.adjacency().toarray()
    ginv = np.linalg.pinv(lap, hermitian=True)
    w = ginv @ deg
    total = deg.sum()
    hmat = w[:, None] - w[None, :] + total * (np.diag(ginv)[None, :] - ginv)
    np.fill_diagonal(hmat, 0.0)
    return hmat


@dataclass(frozen=True)
class TargetTimeEstimate:
    """Degree-stationary average hitting time; ci_halfwidth is 0 when exact."""

    value: float
    ci_halfwidth: float
    num_targets: int


def target_time(g: HrgGraph, num_targets: int | None = None, seed: int = 0,
                cap: int = EXACT_TARGET_CAP) -> TargetTimeEstimate:
    """sum_{u,v} pi(u) pi(v) E_u[time to v], exact or subsampled over targets.

    num_targets None runs the full double sum (one reduced solve per vertex,
    cap-guarded).  Otherwise targets are drawn i.i.d. from pi and the returned
    ci_halfwidth is a 95% normal interval for the target average.
    """
    _require_connected(g, "target_time")
    n = g.num_vertices
    if n == 1:
        return TargetTimeEstimate(0.0, 0.0, 1)
    pi = stationary_distribution(g)
    if num_targets is None:
        if n > cap:
            raise InvalidArgument(f"target_time exact: {n} vertices exceeds cap {cap}")
        value = 0.0
        for v in range(n):
            value += pi[v] * float(pi @ exact_hitting_vector(g, v, cap=max(n, cap)))
        return TargetTimeEstimate(value, 0.0, n)
    if num_targets < 1:
        raise InvalidArgument(f"num_targets must be >= 1, got {num_targets}")
    rng = make_generator(seed, n)
    targets = rng.choice(n, size=num_targets, replace=True, p=pi)
    vals = np.array([pi @ exact_hitting_vector(g, int(v), cap=max(n, cap))
                     for v in targets])
    half = 1.96 * vals.std(ddof=1) / math.sqrt(num_targets) if num_targets > 1 else 0.0
    return TargetTimeEstimate(float(vals.mean()), float(half), num_targets)


def target_time_resistance_form(g: HrgGraph, convention: str = "quarter",
                                cap: int = EXACT_TARGET_CAP) -> float:
    """Companion evaluation c/|E| * sum over ordered pairs of R(u,v) d(u) d(v).

    convention "quarter" (c = 1/4) reproduces the definition sum exactly;
    "eighth" is kept selectable so the factor-of-two check stays cheap.
    """
    constants = {"quarter": 0.25, "eighth": 0.125}
    if convention not in constants:
        raise InvalidArgument(f"unknown convention {convention!r}")
    _require_connected(g, "target_time_resistance_form")
    n = g.num_vertices
    if n == 1:
        return 0.0
    rmat = resistance_matrix(g, cap=cap)
    deg = g.degrees.astype(np.float64)
    total = float(deg @ rmat @ deg)
    return constants[convention] * total / _num_edges(g)


@dataclass(frozen=True)
class MaxHittingEstimate:
    """Largest hitting time found; exact below the cutoff, else a lower bound
    from scanning low-degree and boundary-radius targets."""

    value: float
    exact: bool
    source: int
    target: int


def max_hitting_estimate(g: HrgGraph, exact_cutoff: int = MAX_HITTING_EXACT_CUTOFF,
                         num_candidates: int = 20) -> MaxHittingEstimate:
    _require_connected(g, "max_hitting_estimate")
    n = g.num_vertices
    if n == 1:
        return MaxHittingEstimate(0.0, True, 0, 0)
    if n <= exact_cutoff:
        hmat = hitting_time_matrix(g, cap=exact_cutoff)
        u, v = np.unravel_index(int(hmat.argmax()), hmat.shape)
        return MaxHittingEstimate(float(hmat[u, v]), True, int(u), int(v))
    if num_candidates < 1:
        raise InvalidArgument(f"num_candidates must be >= 1, got {num_candidates}")
    k = min(num_candidates, n)
    by_degree = np.argsort(g.degrees, kind="stable")[:k]
    by_radius = np.argsort(-g.points.r, kind="stable")[:k]
    targets = np.unique(np.concatenate([by_degree, by_radius]))
    best, best_u, best_v = -1.0, 0, 0
    for v in targets:
        h = exact_hitting_vector(g, int(v))
        u = int(h.argmax())
        if h[u] > best:
            best, best_u, best_v = float(h[u]), u, int(v)
    return MaxHittingEstimate(best, False, best_u, best_v)


def matthews_upper(hit_bound: float, n: int) -> float:
    """Cover-time upper bound: max hitting time times the n-th harmonic number."""
    if n < 1:
        raise InvalidArgument(f"n must be >= 1, got {n}")
    if hit_bound < 0:
        raise InvalidArgument(f"hit_bound must be >= 0, got {hit_bound}")
    return hit_bound * math.fsum(1.0 / k for k in range(1, n + 1))


def kklv_lower(g: HrgGraph, subset) -> float:
    """Cover-time lower bound (1/2) * kappa * ln|U| with
    kappa = 2|E| * min pairwise effective resistance over U."""
    _require_connected(g, "kklv_lower")
    ids = sorted({int(v) for v in subset})
    if len(ids) < 2:
        raise InvalidArgument("kklv_lower needs at least two distinct vertices")
    for v in ids:
        _check_vertex(g, v, "subset vertex")
    min_res = min(effective_resistance(g, u, v)
                  for i, u in enumerate(ids) for v in ids[i + 1:])
    return 0.5 * (2 * _num_edges(g)) * min_res * math.log(len(ids))


@dataclass(frozen=True)
class DanglingPath:
    """Chain of vertices hanging off the graph by a single edge.

    vertices runs leaf first; attachment is the degree >= 3 vertex the last
    chain vertex connects to (not itself part of the path).
    """

    vertices: tuple[int, ...]
    attachment: int

    def __len__(self) -> int:
        return len(self.vertices)


def find_dangling_paths(g: HrgGraph, min_length: int = 1) -> list[DanglingPath]:
    """All maximal degree-1 chains ending at a degree >= 3 attachment.

    Components that are bare paths have no attachment and are skipped.
    Sorted longest first, ties by leaf id.
    """
    if min_length < 1:
        raise InvalidArgument(f"min_length must be >= 1, got {min_length}")
    deg = g.degrees
    out: list[DanglingPath] = []
    for leaf in np.flatnonzero(deg == 1):
        chain = [int(leaf)]
        prev, cur = -1, int(leaf)
        attachment = -1
        while True:
            nbrs = g.neighbors(cur)
            nxt = int(nbrs[1]) if int(nbrs[0]) == prev else int(nbrs[0])
            if deg[nxt] >= 3:
                attachment = nxt
                break
            if deg[nxt] == 1:
                break  # whole component is a path
            chain.append(nxt)
            prev, cur = cur, nxt
        if attachment >= 0 and len(chain) >= min_length:
            out.append(DanglingPath(tuple(chain), attachment))
    out.sort(key=lambda p: (-len(p.vertices), p.vertices[0]))
    return out
