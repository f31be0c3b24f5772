"""Explicit unit flows routed along the disk tiling.

A flow between two vertices is assembled from three pieces: a source fan-out
inside the source's half-tile, a middle flow between half-tiles that climbs
the tiling lineage toward the disk center, and a mirrored sink fan-in. The
climb alternates two stages per level: an angular stage that equalizes flow
across a tile, and a radial stage that ships the tile's flow to its parent
half-tile. Tile geometry guarantees every edge used actually exists.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (
    TWO_PI,
    InvalidArgument,
    ModelParams,
    PolarPoint,
    is_edge,
    theta_R_exact,
)
from .tiling import (
    DEFAULT_C_FAULT,
    DEFAULT_CPRIME,
    HalfTileId,
    TileId,
    TilingSpec,
    _max_level_within,
    classify_occupancy,
    half_contains_half,
    half_tile_cell,
    locate,
    locate_many,
    parent_half_tile,
    rho_threshold,
    twin_half,
)


class EmptyHalfTile(Exception):
    """A half-tile required by a flow construction contains no vertex."""

    def __init__(self, half: HalfTileId):
        self.half = half
        super().__init__(f"half-tile {half} contains no vertices")


class SameVertex(InvalidArgument):
    pass


# ---------------------------------------------------------------------------
# vertex membership per half-tile

class _HalfTileIndex:
    """Vertex ids grouped by half-tile, ids ascending within each group."""

    def __init__(self, g, spec: TilingSpec):
        self._groups: dict[tuple[int, int, int], np.ndarray] = {}
        if g.num_vertices == 0:
            return
        level, idx, side = locate_many(g.points.r, g.points.theta, spec)
        code = (level.astype(np.int64) << 40) | (idx << 1) | side
        order = np.argsort(code, kind="stable")
        sorted_code = code[order]
        starts = np.flatnonzero(np.r_[True, sorted_code[1:] != sorted_code[:-1]])
        bounds = np.r_[starts, len(sorted_code)]
        for k, s in enumerate(starts):
            e = bounds[k + 1]
            key = (int(level[order[s]]), int(idx[order[s]]), int(side[order[s]]))
            self._groups[key] = order[s:e].astype(np.int64)

    def members(self, h: HalfTileId) -> np.ndarray:
        key = (h.tile.level, h.tile.index, h.side)
        return self._groups.get(key, np.empty(0, dtype=np.int64))

    def count(self, h: HalfTileId) -> int:
        return len(self.members(h))

    def tile_members(self, t: TileId) -> np.ndarray:
        return np.concatenate([self.members(HalfTileId(t, 0)),
                               self.members(HalfTileId(t, 1))])

    def tile_count(self, t: TileId) -> int:
        return self.count(HalfTileId(t, 0)) + self.count(HalfTileId(t, 1))


def half_tile_index(g, spec: TilingSpec) -> _HalfTileIndex:
    key = ("half_tile_index", spec)
    if key not in g._cache:
        g._cache[key] = _HalfTileIndex(g, spec)
    return g._cache[key]


# ---------------------------------------------------------------------------
# flow container

class Flow:
    """Antisymmetric edge flow with declared source and sink vertex sets.

    Values are stored once per undirected edge on the canonical low-id to
    high-id orientation; reading the reverse orientation negates. Assigning
    flow to a non-edge is a construction bug, hence the hard assert.
    """

    def __init__(self, graph, source, sink):
        self.graph = graph
        self.source = tuple(int(v) for v in source)
        self.sink = tuple(int(v) for v in sink)
        self._vals: dict[tuple[int, int], float] = {}

    def add(self, u: int, v: int, value: float) -> None:
        u, v = int(u), int(v)
        assert u != v, "flow values live on edges, not vertices"
        if u > v:
            u, v, value = v, u, -value
        key = (u, v)
        if key not in self._vals:
            assert self.graph.has_edge(u, v), f"flow assigned to non-edge {key}"
            self._vals[key] = value
        else:
            self._vals[key] += value

    def value(self, u: int, v: int) -> float:
        if u > v:
            return -self._vals.get((v, u), 0.0)
        return self._vals.get((u, v), 0.0)

    def edges(self):
        """(u, v, value) triples on the canonical orientation."""
        for (u, v), val in self._vals.items():
            yield u, v, val

    def num_edges(self) -> int:
        return len(self._vals)

    def net_out(self) -> dict[int, float]:
        """Net outflow per vertex touched by the flow."""
        out: dict[int, float] = {}
        for (u, v), val in self._vals.items():
            out[u] = out.get(u, 0.0) + val
            out[v] = out.get(v, 0.0) - val
        return out

    def add_flow(self, other: "Flow") -> None:
        """Pointwise sum; the operand's source/sink declarations are ignored."""
        for u, v, val in other.edges():
            self.add(u, v, val)


def add_flows(a: Flow, b: Flow, source, sink) -> Flow:
    out = Flow(a.graph, source, sink)
    out.add_flow(a)
    out.add_flow(b)
    return out


def energy(f: Flow) -> float:
    """Dissipated energy at unit conductances: sum of squared edge values."""
    return float(sum(val * val for val in f._vals.values()))


@dataclass(frozen=True)
class FlowReport:
    strength: float
    max_node_residual: float
    energy: float
    balanced: bool


def validate_flow(f: Flow, tol: float = 1e-9) -> FlowReport:
    """Node law at interior vertices, strength, and balancedness."""
    out = f.net_out()
    sources, sinks = set(f.source), set(f.sink)
    resid = 0.0
    for v, x in out.items():
        if v not in sources and v not in sinks:
            resid = max(resid, abs(x))
    strength = sum(out.get(s, 0.0) for s in f.source)
    src = [out.get(s, 0.0) for s in f.source]
    snk = [-out.get(t, 0.0) for t in f.sink]
    balanced = True
    if src:
        balanced &= max(src) - min(src) <= tol
    if snk:
        balanced &= max(snk) - min(snk) <= tol
    return FlowReport(strength=strength, max_node_residual=resid,
                      energy=energy(f), balanced=bool(balanced))


def flow_to_csv(f: Flow) -> str:
    lines = ["u,v,value"]
    for (u, v) in sorted(f._vals):
        lines.append(f"{u},{v},{float(f._vals[(u, v)])!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# construction helpers

def _add_block(f: Flow, us: np.ndarray, vs: np.ndarray, value: float) -> None:
    if value == 0.0:
        return
    for u in us:
        for v in vs:
            f.add(int(u), int(v), value)


def _require(idx: _HalfTileIndex, h: HalfTileId) -> np.ndarray:
    m = idx.members(h)
    if len(m) == 0:
        raise EmptyHalfTile(h)
    return m


def _chain(idx: _HalfTileIndex, h: HalfTileId, stop_level: int) -> list[HalfTileId]:
    """Lineage half-tiles from h up to stop_level, all verified nonempty."""
    _require(idx, h)
    out = [h]
    while out[-1].tile.level > stop_level:
        nxt = parent_half_tile(out[-1].tile)
        _require(idx, nxt)
        out.append(nxt)
    return out


def _climb(f: Flow, idx: _HalfTileIndex, chain: list[HalfTileId],
           sign: float) -> None:
    """Cascade one unit from chain[0] up to chain[-1].

    At each level the unit rests uniformly on the chain half-tile; the
    angular stage levels it across the tile and the radial stage ships it
    to the parent half-tile.
    """
    for pos, h in enumerate(chain[:-1]):
        mh = idx.members(h)
        mtw = idx.members(twin_half(h))
        ct = len(mh) + len(mtw)
        _add_block(f, mh, mtw, sign / (ct * len(mh)))
        mup = idx.members(chain[pos + 1])
        val = sign / (ct * len(mup))
        _add_block(f, mh, mup, val)
        _add_block(f, mtw, mup, val)


def _common_ancestor_level(a: TileId, b: TileId) -> int | None:
    """Level of the deepest common ancestor tile, None if roots differ."""
    m = min(a.level, b.level)
    ja, jb = a.index >> (a.level - m), b.index >> (b.level - m)
    while m >= 0:
        if ja == jb:
            return m
        ja >>= 1
        jb >>= 1
        m -= 1
    return None


def _build_half_tile_flow(f: Flow, g, spec: TilingSpec,
                          Hs: HalfTileId, Ht: HalfTileId) -> None:
    idx = half_tile_index(g, spec)
    if Hs == Ht:
        return
    if Hs.tile == Ht.tile:
        ms, mt = _require(idx, Hs), _require(idx, Ht)
        _add_block(f, ms, mt, 1.0 / (len(ms) * len(mt)))
        return
    if half_contains_half(Ht, Hs):
        chain = _chain(idx, Hs, Ht.tile.level)
        assert chain[-1] == Ht
        _climb(f, idx, chain, 1.0)
        return
    if half_contains_half(Hs, Ht):
        chain = _chain(idx, Ht, Hs.tile.level)
        assert chain[-1] == Hs
        _climb(f, idx, chain, -1.0)
        return
    stop = _common_ancestor_level(Hs.tile, Ht.tile)
    cs = _chain(idx, Hs, stop if stop is not None else 0)
    ct = _chain(idx, Ht, stop if stop is not None else 0)
    As, At = cs[-1], ct[-1]
    if stop is None:
        assert As.tile.index != At.tile.index
    else:
        assert As.tile == At.tile and As.side != At.side
    _climb(f, idx, cs, 1.0)
    _add_block(f, idx.members(As), idx.members(At),
               1.0 / (idx.count(As) * idx.count(At)))
    _climb(f, idx, ct, -1.0)


# ---------------------------------------------------------------------------
# public constructors

def source_sink_flow(g, spec: TilingSpec, v: int,
                     direction: str = "source") -> Flow:
    """Fan a unit between v and the other vertices of its half-tile.

    With k vertices in the half-tile each edge carries 1/k, so the lone
    piece has strength (k-1)/k; the deficit is covered by the middle flow
    when pieces are composed. A singleton half-tile yields an empty flow.
    """
    if direction not in ("source", "sink"):
        raise InvalidArgument(f"direction must be source or sink: {direction}")
    h = locate(g.point(v), spec)
    idx = half_tile_index(g, spec)
    members = _require(idx, h)
    others = members[members != v]
    if direction == "source":
        f = Flow(g, (v,), others)
        for u in others:
            f.add(v, int(u), 1.0 / len(members))
    else:
        f = Flow(g, others, (v,))
        for u in others:
            f.add(int(u), v, 1.0 / len(members))
    return f


def half_tile_flow(g, spec: TilingSpec, Hs: HalfTileId, Ht: HalfTileId) -> Flow:
    """Balanced unit flow from one half-tile's vertices to another's."""
    idx = half_tile_index(g, spec)
    f = Flow(g, idx.members(Hs), idx.members(Ht))
    _build_half_tile_flow(f, g, spec, Hs, Ht)
    return f


def st_flow(g, spec: TilingSpec, s: int, t: int) -> Flow:
    """Composite unit flow between two vertices."""
    if s == t:
        raise SameVertex(f"flow endpoints coincide: {s}")
    idx = half_tile_index(g, spec)
    Hs = locate(g.point(s), spec)
    Ht = locate(g.point(t), spec)
    f = Flow(g, (s,), (t,))
    _build_half_tile_flow(f, g, spec, Hs, Ht)
    ms = idx.members(Hs)
    for u in ms[ms != s]:
        f.add(s, int(u), 1.0 / len(ms))
    mt = idx.members(Ht)
    for u in mt[mt != t]:
        f.add(int(u), t, 1.0 / len(mt))
    return f


# ---------------------------------------------------------------------------
# flows from an added vertex (commute-time upper bounds)

class AugmentedGraph:
    """Read-only view of a graph plus one extra vertex at a fixed point.

    The extra vertex's id is the base graph's vertex count; adjacency to it
    follows the same strict distance-threshold rule as the base graph.
    """

    def __init__(self, g, p: PolarPoint):
        self.base = g
        self.extra_point = p
        self.extra_id = g.num_vertices
        self._cache: dict = {}

    @property
    def params(self) -> ModelParams:
        return self.base.params

    @property
    def num_vertices(self) -> int:
        return self.base.num_vertices + 1

    def point(self, i: int) -> PolarPoint:
        if i == self.extra_id:
            return self.extra_point
        return self.base.point(i)

    def has_edge(self, u: int, v: int) -> bool:
        if u != self.extra_id and v != self.extra_id:
            return self.base.has_edge(u, v)
        other = v if u == self.extra_id else u
        if other == self.extra_id:
            return False
        return is_edge(self.extra_point, self.base.point(other), self.params.R)


def commute_levels(spec: TilingSpec, r_w: float, C: float = DEFAULT_C_FAULT,
                   Cprime: float = DEFAULT_CPRIME) -> tuple[int, int]:
    """Depth and recursion count for the added-vertex flow.

    The depth level is the shallower of one past the fault-free frontier
    and the first level whose remaining depth drops below (2 alpha - 1)
    times the vertex's own. The recursion count climbs while a full tile
    angle at the shallower level stays within the vertex's angular reach.
    Cprime is accepted for interface symmetry; the thresholds here depend
    only on C.
    """
    params = spec.params
    R = params.R
    rho = rho_threshold(params, C)
    lo = (1.0 - 1.0 / (2.0 * params.alpha)) * R
    if not (lo <= r_w < rho):
        raise InvalidArgument(
            f"radius {r_w} outside the flow domain [{lo}, {rho})")
    ell = _max_level_within(spec, rho)
    gap = (2.0 * params.alpha - 1.0) * (R - r_w)
    by_depth = next(i for i in range(spec.max_level + 1)
                    if R - spec.h_of(i) <= gap)
    ell_prime = min(ell + 1, by_depth)
    reach = theta_R_exact(r_w, spec.h_of(ell_prime), R)
    k = 0
    while (k + 1 <= ell_prime and
           theta_R_exact(spec.h_of(ell_prime - k - 1),
                         spec.h_of(ell_prime - k - 1), R) <= reach):
        k += 1
    assert r_w <= spec.h_of(ell_prime)
    ell_w = int(np.searchsorted(spec.h_array()[1:], r_w, side="right"))
    assert ell_w <= ell_prime <= ell + 1
    assert k <= ell_prime - ell_w
    return ell_prime, k


def commute_flow(g, spec: TilingSpec, w: PolarPoint,
                 C: float = DEFAULT_C_FAULT, Cprime: float = DEFAULT_CPRIME,
                 require_nonfaulty: bool = True) -> Flow:
    """Unit flow from an added vertex into its guide half-tile.

    Fans 2^-k units into each deepest-level half below the guide half-tile,
    then per level rebalances each tile's two halves and ships the tile's
    flow to its parent half-tile until the guide half-tile holds the unit.
    With require_nonfaulty the fault-free-ball hypothesis is checked
    up front; construction itself only needs the touched half-tiles
    nonempty and raises EmptyHalfTile otherwise.
    """
    ell_prime, k = commute_levels(spec, w.r, C, Cprime)
    if require_nonfaulty:
        key = ("occupancy", spec, C, Cprime)
        if key not in g._cache:
            g._cache[key] = classify_occupancy(g, spec, C, Cprime)
        rep = g._cache[key]
        bad = [t for t in rep.tiles_intersecting_ball(rep.rho)
               if rep.is_faulty(t)]
        if bad:
            raise InvalidArgument(
                f"{len(bad)} faulty tiles intersect the fault-free ball, "
                f"first {bad[0]}")
    L0 = ell_prime - k
    N0 = spec.N[L0]
    j0 = min(int(w.theta * N0 / TWO_PI), N0 - 1)
    j2 = min(int(w.theta * 2 * N0 / TWO_PI), 2 * N0 - 1)
    Hw = HalfTileId(TileId(L0, j0), min(max(j2 - 2 * j0, 0), 1))
    q0 = half_tile_cell(Hw)

    idx = half_tile_index(g, spec)
    for lam in range(L0, ell_prime + 1):
        span = 1 << (lam - L0)
        for cell in range(q0 * span, (q0 + 1) * span):
            _require(idx, HalfTileId(TileId(lam, cell >> 1), cell & 1))

    aug = AugmentedGraph(g, w)
    f = Flow(aug, (aug.extra_id,), idx.members(Hw))
    span = 1 << k
    for cell in range(q0 * span, (q0 + 1) * span):
        m = idx.members(HalfTileId(TileId(ell_prime, cell >> 1), cell & 1))
        val = (0.5 ** k) / len(m)
        for v in m:
            f.add(aug.extra_id, int(v), val)
    for s in range(k, 0, -1):
        lam = L0 + s
        tspan = 1 << (s - 1)
        for j in range(q0 * tspan, (q0 + 1) * tspan):
            tile = TileId(lam, j)
            m0 = idx.members(HalfTileId(tile, 0))
            m1 = idx.members(HalfTileId(tile, 1))
            ctile = len(m0) + len(m1)
            if len(m0) != len(m1):
                small, large = (m0, m1) if len(m0) < len(m1) else (m1, m0)
                _add_block(f, small, large,
                           (0.5 ** s) * (1.0 / len(small) - 1.0 / len(large))
                           / ctile)
            mup = idx.members(parent_half_tile(tile))
            val = (0.5 ** (s - 1)) / (ctile * len(mup))
            _add_block(f, m0, mup, val)
            _add_block(f, m1, mup, val)
    return f
