"""Sampling and construction of hyperbolic random graphs.

Vertices are points of a Poisson process (or a fixed-size binomial draw) on
the disk B_O(R); two vertices are adjacent iff their hyperbolic distance is
strictly below R. Both graph builders share the geometry.edge_mask kernel,
so they produce identical edge sets bit for bit; the bucketed builder just
never tests the hopeless pairs.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from hyperwalk.geometry import (
    TWO_PI,
    InvalidArgument,
    ModelParams,
    PolarPoint,
    edge_mask,
    mu_ball_origin,
    radial_quantile,
    theta_R_exact,
)
from hyperwalk.rng import make_generator


@dataclass(frozen=True)
class SampleMode:
    """Poissonized (count ~ Poisson(n)) or binomial (fixed count) sampling."""

    kind: str
    count: int | None = None

    def __post_init__(self):
        if self.kind not in ("poissonized", "binomial"):
            raise InvalidArgument(f"unknown sample mode {self.kind!r}")
        if self.kind == "binomial" and (self.count is None or self.count < 0):
            raise InvalidArgument("binomial mode needs a count >= 0")

    @staticmethod
    def poissonized() -> "SampleMode":
        return SampleMode("poissonized")

    @staticmethod
    def binomial(count: int) -> "SampleMode":
        return SampleMode("binomial", count)


@dataclass(frozen=True)
class PointSet:
    """Sampled vertex positions, in sampling order (index = vertex id)."""

    params: ModelParams
    r: np.ndarray
    theta: np.ndarray

    def __len__(self) -> int:
        return self.r.shape[0]

    def point(self, i: int) -> PolarPoint:
        return PolarPoint(float(self.r[i]), float(self.theta[i]))


def sample_points(params: ModelParams, mode: SampleMode | str, seed: int) -> PointSet:
    """Draw vertex positions; deterministic in (params, mode, seed)."""
    if isinstance(mode, str):
        mode = SampleMode(mode)
    g = make_generator(seed)
    if mode.kind == "poissonized":
        m = int(g.poisson(params.n))
    else:
        m = int(mode.count)
    theta = g.uniform(0.0, TWO_PI, m)
    u = g.random(m)
    r = np.asarray(radial_quantile(u, params), dtype=np.float64).reshape(m)
    return PointSet(params=params, r=r, theta=theta)


class HrgGraph:
    """Immutable graph over a PointSet with CSR adjacency (sorted neighbor lists)."""

    def __init__(self, points: PointSet, indptr: np.ndarray, indices: np.ndarray):
        self.params = points.params
        self.points = points
        self.indptr = indptr
        self.indices = indices
        self.edge_count = int(indices.shape[0] // 2)
        self._cache: dict = {}

    @property
    def num_vertices(self) -> int:
        return len(self.points)

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < nb.shape[0] and nb[i] == v)

    def point(self, v: int) -> PolarPoint:
        return self.points.point(v)

    @property
    def vertices(self) -> list[tuple[int, PolarPoint]]:
        return [(i, self.points.point(i)) for i in range(self.num_vertices)]

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """All edges as parallel arrays with u < v, cached."""
        if "edges" not in self._cache:
            n = self.num_vertices
            u = np.repeat(np.arange(n), np.diff(self.indptr))
            v = self.indices
            keep = u < v
            self._cache["edges"] = (u[keep].copy(), v[keep].copy())
        return self._cache["edges"]

    def adjacency(self) -> csr_matrix:
        if "adj" not in self._cache:
            data = np.ones(self.indices.shape[0], dtype=np.float64)
            n = self.num_vertices
            self._cache["adj"] = csr_matrix((data, self.indices, self.indptr), shape=(n, n))
        return self._cache["adj"]


def _csr_from_pairs(n: int, us: np.ndarray, vs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric CSR (both directions) from u < v pair arrays, neighbors sorted."""
    src = np.concatenate([us, vs])
    dst = np.concatenate([vs, us])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, dst.astype(np.int64)


def build_graph_naive(points: PointSet) -> HrgGraph:
    """Reference builder: tests every pair. Quadratic, used as the oracle."""
    m = len(points)
    R = points.params.R
    us, vs = [], []
    for i in range(m - 1):
        mask = edge_mask(points.r[i], points.theta[i],
                         points.r[i + 1:], points.theta[i + 1:], R)
        hits = np.nonzero(mask)[0]
        if hits.shape[0]:
            us.append(np.full(hits.shape[0], i, dtype=np.int64))
            vs.append(hits + i + 1)
    u = np.concatenate(us) if us else np.empty(0, dtype=np.int64)
    v = np.concatenate(vs) if vs else np.empty(0, dtype=np.int64)
    indptr, indices = _csr_from_pairs(m, u, v)
    return HrgGraph(points, indptr, indices)


def build_graph_bucketed(points: PointSet) -> HrgGraph:
    """Builder with radial bands and angular windows.

    Points are grouped into radial bands; a pair of bands with inner radii
    l1, l2 only admits edges within angle theta_R(l1, l2), so each point
    scans a sorted angular window of the partner band instead of the whole
    set. Edge decisions still go through edge_mask, hence agree with the
    naive builder exactly.
    """
    m = len(points)
    R = points.params.R
    if m <= 1:
        return HrgGraph(points, np.zeros(m + 1, dtype=np.int64), np.empty(0, dtype=np.int64))

    band_edges = np.concatenate([[0.0], np.arange(R / 2.0, max(points.r.max(), R) + 1.0, 1.0)])
    band_of = np.searchsorted(band_edges, points.r, side="right") - 1
    nbands = band_edges.shape[0]

    by_band: list[np.ndarray] = []
    thetas: list[np.ndarray] = []
    theta_ext: list[np.ndarray] = []
    ids_ext: list[np.ndarray] = []
    for b in range(nbands):
        ids = np.nonzero(band_of == b)[0]
        order = np.argsort(points.theta[ids], kind="stable")
        ids = ids[order]
        by_band.append(ids)
        t = points.theta[ids]
        thetas.append(t)
        theta_ext.append(np.concatenate([t, t + TWO_PI]))
        ids_ext.append(np.concatenate([ids, ids]))

    us, vs = [], []
    for b1 in range(nbands):
        ids1 = by_band[b1]
        if ids1.shape[0] == 0:
            continue
        for b2 in range(b1, nbands):
            ids2 = by_band[b2]
            if ids2.shape[0] == 0:
                continue
            l1, l2 = band_edges[b1], band_edges[b2]
            if l1 + l2 >= R:
                w = theta_R_exact(l1, l2, R) + 1e-9  # slack only adds candidates
            else:
                w = math.pi
            if w >= math.pi:
                # full cross scan (only inner bands reach here; they are small)
                cand = ids2
                for i in ids1:
                    sel = cand[cand > i] if b1 == b2 else cand
                    if sel.shape[0] == 0:
                        continue
                    mask = edge_mask(points.r[i], points.theta[i],
                                     points.r[sel], points.theta[sel], R)
                    hit = sel[mask]
                    if hit.shape[0]:
                        us.append(np.full(hit.shape[0], i, dtype=np.int64))
                        vs.append(hit)
                continue
            text, iext = theta_ext[b2], ids_ext[b2]
            # window start folded into [0, 2*pi); length 2w < 2*pi, so the
            # window lies inside [0, 4*pi) and hits each candidate exactly once
            start = (points.theta[ids1] - w) % TWO_PI
            lo = np.searchsorted(text, start, side="left")
            hi = np.searchsorted(text, start + 2.0 * w, side="right")
            for idx, i in enumerate(ids1):
                sel = iext[lo[idx]:hi[idx]]
                sel = sel[sel > i] if b1 == b2 else sel
                if sel.shape[0] == 0:
                    continue
                mask = edge_mask(points.r[i], points.theta[i],
                                 points.r[sel], points.theta[sel], R)
                hit = sel[mask]
                if hit.shape[0]:
                    us.append(np.full(hit.shape[0], i, dtype=np.int64))
                    vs.append(hit)

    if us:
        u = np.concatenate(us)
        v = np.concatenate(vs)
        u, v = np.minimum(u, v), np.maximum(u, v)
    else:
        u = np.empty(0, dtype=np.int64)
        v = np.empty(0, dtype=np.int64)
    indptr, indices = _csr_from_pairs(m, u, v)
    return HrgGraph(points, indptr, indices)


@dataclass
class ComponentInfo:
    labels: np.ndarray
    sizes: np.ndarray
    center_label: int | None

    @property
    def num_components(self) -> int:
        return self.sizes.shape[0]

    def members(self, label: int) -> np.ndarray:
        return np.nonzero(self.labels == label)[0]


def components_and_center(g: HrgGraph) -> ComponentInfo:
    """Connected components plus the center component.

    The center component is the one containing the vertices with r < R/2;
    those form a clique (any two have d <= r1 + r2 < R), so the label is
    well defined. None when no vertex lies that deep.
    """
    if g.num_vertices == 0:
        return ComponentInfo(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64), None)
    ncomp, labels = connected_components(g.adjacency(), directed=False)
    sizes = np.bincount(labels, minlength=ncomp)
    inner = np.nonzero(g.points.r < g.params.R / 2.0)[0]
    if inner.shape[0] == 0:
        return ComponentInfo(labels, sizes, None)
    inner_labels = np.unique(labels[inner])
    assert inner_labels.shape[0] == 1, "inner clique split across components"
    return ComponentInfo(labels, sizes, int(inner_labels[0]))


def induced_subgraph(g: HrgGraph, vertex_ids: np.ndarray) -> tuple[HrgGraph, np.ndarray]:
    """Subgraph on the given vertices, relabeled 0..k-1 in sorted id order.

    Returns (subgraph, original_ids); original_ids[i] is the source id of
    new vertex i.
    """
    ids = np.unique(np.asarray(vertex_ids, dtype=np.int64))
    pos = np.full(g.num_vertices, -1, dtype=np.int64)
    pos[ids] = np.arange(ids.shape[0])
    eu, ev = g.edge_arrays()
    keep = (pos[eu] >= 0) & (pos[ev] >= 0)
    sub_pts = PointSet(params=g.params, r=g.points.r[ids].copy(),
                       theta=g.points.theta[ids].copy())
    indptr, indices = _csr_from_pairs(ids.shape[0], pos[eu[keep]], pos[ev[keep]])
    return HrgGraph(sub_pts, indptr, indices), ids


def center_subgraph(g: HrgGraph) -> tuple[HrgGraph, np.ndarray]:
    """Convenience: induced subgraph of the center component."""
    info = components_and_center(g)
    if info.center_label is None:
        raise InvalidArgument("graph has no center component (no vertex with r < R/2)")
    return induced_subgraph(g, info.members(info.center_label))


@dataclass
class DegreeSummary:
    mean_degree: float
    bin_edges: np.ndarray      # powers of two
    bin_counts: np.ndarray
    tail_exponent: float | None


def degree_summary(g: HrgGraph) -> DegreeSummary:
    """Mean degree, log-binned histogram, and a CCDF tail exponent.

    The tail exponent is 1 - slope of the log-log least-squares fit of the
    empirical CCDF over degrees >= 10; None when fewer than 5 distinct
    degrees reach that range.
    """
    n = g.num_vertices
    if n == 0:
        raise InvalidArgument("degree summary of an empty graph")
    deg = g.degrees
    mean_degree = float(2.0 * g.edge_count / n)
    dmax = int(deg.max())
    top = max(1, dmax.bit_length())
    bin_edges = 2 ** np.arange(0, top + 1)
    bin_counts = np.histogram(deg, bins=np.concatenate([[0], bin_edges]))[0]

    tail = None
    vals, counts = np.unique(deg, return_counts=True)
    ccdf = np.cumsum(counts[::-1])[::-1] / n  # P(D >= d)
    sel = vals >= 10
    if np.count_nonzero(sel) >= 5:
        x = np.log(vals[sel].astype(np.float64))
        y = np.log(ccdf[sel])
        slope = np.polyfit(x, y, 1)[0]
        tail = float(1.0 - slope)
    return DegreeSummary(mean_degree, bin_edges, bin_counts, tail)


def graph_from_edge_list(n: int, edges, params: ModelParams | None = None,
                         points: PointSet | None = None) -> HrgGraph:
    """Graph with a prescribed edge set (benchmarks, synthetic tests, loaders).

    Positions default to the origin; anything position-dependent is then
    meaningless but the combinatorial operations all work.
    """
    if params is None:
        params = ModelParams(alpha=0.7, nu=1.0, n=max(int(n), 2))
    if points is None:
        points = PointSet(params=params, r=np.zeros(n), theta=np.zeros(n))
    e = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
    u, v = np.minimum(e[:, 0], e[:, 1]), np.maximum(e[:, 0], e[:, 1])
    assert np.all(u != v), "self-loops are not allowed"
    indptr, indices = _csr_from_pairs(n, u, v)
    return HrgGraph(points, indptr, indices)


# ---------------------------------------------------------------------------
# serialization; float fields use repr, which round-trips binary64 exactly

def graph_to_json(g: HrgGraph) -> str:
    eu, ev = g.edge_arrays()
    payload = {
        "params": {"alpha": g.params.alpha, "nu": g.params.nu, "n": g.params.n,
                   "R": g.params.R},
        "vertices": [[i, float(g.points.r[i]), float(g.points.theta[i])]
                     for i in range(g.num_vertices)],
        "edges": [[int(a), int(b)] for a, b in zip(eu, ev)],
    }
    return json.dumps(payload)


def graph_from_json(text: str) -> HrgGraph:
    payload = json.loads(text)
    p = payload["params"]
    params = ModelParams(alpha=p["alpha"], nu=p["nu"], n=int(p["n"]))
    if "R" in p:
        assert p["R"] == params.R, "serialized R inconsistent with (n, nu)"
    verts = payload["vertices"]
    m = len(verts)
    r = np.empty(m)
    theta = np.empty(m)
    for vid, rv, tv in verts:
        r[vid] = rv
        theta[vid] = tv
    pts = PointSet(params=params, r=r, theta=theta)
    edges = payload["edges"]
    u = np.array([e[0] for e in edges], dtype=np.int64)
    v = np.array([e[1] for e in edges], dtype=np.int64)
    indptr, indices = _csr_from_pairs(m, np.minimum(u, v), np.maximum(u, v))
    return HrgGraph(pts, indptr, indices)


def graph_to_csv_pair(g: HrgGraph) -> tuple[str, str]:
    """(vertices_csv, edges_csv); model parameters ride in a comment header."""
    vbuf = io.StringIO()
    vbuf.write(f"# alpha={g.params.alpha!r} nu={g.params.nu!r} n={g.params.n}\n")
    vbuf.write("id,r,theta\n")
    for i in range(g.num_vertices):
        vbuf.write(f"{i},{float(g.points.r[i])!r},{float(g.points.theta[i])!r}\n")
    ebuf = io.StringIO()
    ebuf.write("u,v\n")
    eu, ev = g.edge_arrays()
    for a, b in zip(eu, ev):
        ebuf.write(f"{a},{b}\n")
    return vbuf.getvalue(), ebuf.getvalue()


def graph_from_csv_pair(vertices_csv: str, edges_csv: str) -> HrgGraph:
    vlines = vertices_csv.strip().split("\n")
    header = vlines[0]
    assert header.startswith("# "), "vertices csv must carry the parameter header"
    fields = dict(tok.split("=") for tok in header[2:].split())
    params = ModelParams(alpha=float(fields["alpha"]), nu=float(fields["nu"]),
                         n=int(fields["n"]))
    rows = [ln.split(",") for ln in vlines[2:] if ln]
    m = len(rows)
    r = np.empty(m)
    theta = np.empty(m)
    for sid, sr, st in rows:
        r[int(sid)] = float(sr)
        theta[int(sid)] = float(st)
    pts = PointSet(params=params, r=r, theta=theta)
    elines = [ln.split(",") for ln in edges_csv.strip().split("\n")[1:] if ln]
    u = np.array([int(a) for a, _ in elines], dtype=np.int64)
    v = np.array([int(b) for _, b in elines], dtype=np.int64)
    indptr, indices = _csr_from_pairs(m, np.minimum(u, v), np.maximum(u, v))
    return HrgGraph(pts, indptr, indices)
