"""Recursive tiling of the disk and half-tile occupancy classification.

The disk splits into annular levels whose radii make the threshold angle
halve from one level to the next; each level is cut into 2^i * N_0 equal
sectors, so a tile's angular interval is exactly the union of its two
children's intervals. All index arithmetic is dyadic and exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from hyperwalk.geometry import (
    TWO_PI,
    InvalidArgument,
    ModelParams,
    PolarPoint,
    mu_ball_origin,
    theta_R_exact,
)

LN2 = math.log(2.0)

DEFAULT_C_FAULT = 20.0
DEFAULT_CPRIME = 32.0 * LN2


class TileId(NamedTuple):
    level: int
    index: int


class HalfTileId(NamedTuple):
    tile: TileId
    side: int


@dataclass(frozen=True)
class TilingSpec:
    """Level radii and sector counts of a built tiling.

    h[0] is the inner radius of level 0 (always 0); h[i+1] is the outer
    radius of level i. Use h_of(i) rather than indexing h directly.
    """

    c: float
    epsilon: float
    params: ModelParams
    h: tuple[float, ...]
    N: tuple[int, ...]
    theta: tuple[float, ...]

    @property
    def max_level(self) -> int:
        return len(self.N) - 1

    def h_of(self, level: int) -> float:
        # level -1 is the degenerate inner boundary of the root annulus
        return self.h[level + 1]

    def h_array(self) -> np.ndarray:
        return np.asarray(self.h)


def build_tiling(params: ModelParams, c: float) -> TilingSpec:
    """Construct the tiling for spacing constant c.

    Level radii beyond h_1 solve theta_R(h, h) = theta_R(h_prev, h_prev)/2
    by bisection (the map is strictly decreasing); levels stop at the first
    radius >= R, which is still included.
    """
    if not (c > 0.0):
        raise InvalidArgument(f"spacing constant must be positive, got {c}")
    R = params.R
    if R <= 0.0:
        raise InvalidArgument(f"disk radius must be positive, got R={R}")
    h = [0.0, R / 2.0, (R + c) / 2.0]  # h_{-1}, h_0, h_1
    while h[-1] < R:
        prev = h[-1]
        target = 0.5 * theta_R_exact(prev, prev, R)
        lo, hi = prev, prev + 2.0
        assert theta_R_exact(hi, hi, R) < target, "bisection bracket failed"
        while hi - lo > 1e-12:
            mid = 0.5 * (lo + hi)
            if theta_R_exact(mid, mid, R) >= target:
                lo = mid
            else:
                hi = mid
        h.append(0.5 * (lo + hi))

    n_levels = len(h) - 1
    t1 = theta_R_exact(h[2], h[2], R)
    N0 = math.ceil(TWO_PI / t1)
    N = tuple(int(N0) << i for i in range(n_levels))
    theta = tuple(TWO_PI / Ni for Ni in N)

    spec = TilingSpec(c=c, epsilon=0.5 * LN2, params=params,
                      h=tuple(h), N=N, theta=theta)
    # Halving holds from level 2 on; h_1 is pinned to (R+c)/2 directly and
    # theta_R(h_0, h_0) is exactly pi, so level 1 is the anchor, not halved.
    for i in range(1, n_levels):
        ti = theta_R_exact(spec.h_of(i), spec.h_of(i), R)
        if i >= 2:
            tprev = theta_R_exact(spec.h_of(i - 1), spec.h_of(i - 1), R)
            assert abs(ti - 0.5 * tprev) <= 1e-10 * tprev
        assert theta[i] <= ti
    assert all(b > a for a, b in zip(h, h[1:]))
    return spec


def calibrate_c(params: ModelParams, epsilon: float = 0.5 * LN2,
                c_max: float = 1024.0) -> float:
    """Smallest c in the doubling sweep {0.5, 1, 2, ...} passing validate_spacing."""
    c = 0.5
    while c <= c_max:
        if validate_spacing(build_tiling(params, c), epsilon).passed:
            return c
        c *= 2.0
    raise InvalidArgument(f"no spacing constant up to {c_max} satisfies eps={epsilon}")


def locate(p: PolarPoint, spec: TilingSpec) -> HalfTileId:
    """Half-tile containing p. Intervals are closed at the lower end."""
    level, index, side = locate_many(np.array([p.r]), np.array([p.theta]), spec)
    return HalfTileId(TileId(int(level[0]), int(index[0])), int(side[0]))


def locate_many(r: np.ndarray, theta: np.ndarray,
                spec: TilingSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized locate: arrays of (level, index, side)."""
    harr = spec.h_array()
    if np.any(r >= harr[-1]) or np.any(r < 0.0):
        bad = float(r[(r >= harr[-1]) | (r < 0.0)][0])
        raise InvalidArgument(f"radius {bad} outside [0, {harr[-1]})")
    level = np.searchsorted(harr[1:], r, side="right").astype(np.int64)
    Ns = np.asarray(spec.N, dtype=np.int64)[level]
    # doubling in IEEE is exact, so idx2 == 2*idx or 2*idx + 1 always
    idx = np.minimum((theta * Ns / TWO_PI).astype(np.int64), Ns - 1)
    idx2 = np.minimum((theta * (2 * Ns) / TWO_PI).astype(np.int64), 2 * Ns - 1)
    side = np.clip(idx2 - 2 * idx, 0, 1)
    return level, idx, side


# ---------------------------------------------------------------------------
# lineage

def parent_tile(t: TileId) -> TileId:
    """Parent one level up; root tiles are their own parent."""
    if t.level == 0:
        return t
    return TileId(t.level - 1, t.index >> 1)


def children_tiles(t: TileId, spec: TilingSpec) -> list[TileId]:
    if t.level >= spec.max_level:
        return []
    return [TileId(t.level + 1, 2 * t.index), TileId(t.level + 1, 2 * t.index + 1)]


def twin_half(h: HalfTileId) -> HalfTileId:
    return HalfTileId(h.tile, 1 - h.side)


def parent_half_tile(t: TileId) -> HalfTileId | None:
    """Half of the parent whose angular interval equals t's interval.

    The sector grids are aligned, so the side is just the index parity.
    None for root tiles (they have no distinct parent).
    """
    if t.level == 0:
        return None
    return HalfTileId(parent_tile(t), t.index & 1)


def ancestors(t: TileId) -> list[TileId]:
    """Self, parent, ..., root."""
    out = [t]
    while t.level > 0:
        t = parent_tile(t)
        out.append(t)
    return out


@dataclass(frozen=True)
class Lineage:
    parent: TileId
    children: list[TileId]
    twin: HalfTileId | None
    parent_half: HalfTileId | None
    ancestors: list[TileId]


def lineage(t: TileId | HalfTileId, spec: TilingSpec) -> Lineage:
    tile = t.tile if isinstance(t, HalfTileId) else t
    return Lineage(
        parent=parent_tile(tile),
        children=children_tiles(tile, spec),
        twin=twin_half(t) if isinstance(t, HalfTileId) else None,
        parent_half=parent_half_tile(tile),
        ancestors=ancestors(tile),
    )


def half_tile_cell(h: HalfTileId) -> int:
    """Angular cell of a half-tile on the doubled grid (2 N_level sectors)."""
    return 2 * h.tile.index + h.side


def half_contains_half(outer: HalfTileId, inner: HalfTileId) -> bool:
    """True iff the outer half-tile's angular interval contains the inner's.

    Works across levels through exact dyadic cell arithmetic.
    """
    do, di = outer.tile.level, inner.tile.level
    if do > di:
        return False
    return half_tile_cell(inner) >> (di - do) == half_tile_cell(outer)


# ---------------------------------------------------------------------------
# occupancy

def rho_threshold(params: ModelParams, C: float) -> float:
    return params.R - math.log(C * params.R / params.nu) / (1.0 - params.alpha)


def rho_prime_threshold(params: ModelParams, Cprime: float) -> float:
    return params.R - math.log(2.0 * Cprime / params.nu) / (1.0 - params.alpha)


def _max_level_within(spec: TilingSpec, radius: float) -> int:
    """Largest level i with h_i <= radius; -1 when even h_0 exceeds it."""
    out = -1
    for i in range(spec.max_level + 1):
        if spec.h_of(i) <= radius:
            out = i
    return out


@dataclass
class OccupancyReport:
    spec: TilingSpec
    C: float
    Cprime: float
    rho: float
    rho_prime: float
    ell: int
    ell_prime: int
    counts: list[np.ndarray]        # per level, shape (N_i, 2)
    expected_half: np.ndarray       # per level, same for every half of a level
    sparse: list[np.ndarray]        # per level, shape (N_i, 2) bool
    faulty: list[np.ndarray]        # per level, shape (N_i,) bool
    robust: list[np.ndarray]        # per level, shape (N_i,) bool

    def count(self, h: HalfTileId) -> int:
        return int(self.counts[h.tile.level][h.tile.index, h.side])

    def is_sparse(self, h: HalfTileId) -> bool:
        return bool(self.sparse[h.tile.level][h.tile.index, h.side])

    def is_faulty(self, t: TileId) -> bool:
        return bool(self.faulty[t.level][t.index])

    def is_robust(self, t: TileId) -> bool:
        return bool(self.robust[t.level][t.index])

    def tiles_intersecting_ball(self, radius: float) -> list[TileId]:
        """Tiles whose annulus starts inside the closed ball of that radius."""
        out = []
        for i in range(self.spec.max_level + 1):
            if self.spec.h_of(i - 1) <= radius:
                out.extend(TileId(i, j) for j in range(self.spec.N[i]))
        return out

    def to_json_dict(self) -> dict:
        levels = []
        for i in range(self.spec.max_level + 1):
            levels.append({
                "level": i,
                "sectors": self.spec.N[i],
                "vertices": int(self.counts[i].sum()),
                "expected_per_half": float(self.expected_half[i]),
                "sparse_halves": int(self.sparse[i].sum()),
                "faulty_tiles": int(self.faulty[i].sum()),
                "robust_tiles": int(self.robust[i].sum()),
            })
        return {
            "C": self.C, "Cprime": self.Cprime,
            "rho": self.rho, "rho_prime": self.rho_prime,
            "ell": self.ell, "ell_prime": self.ell_prime,
            "levels": levels,
            "faulty": [[i, int(j)] for i in range(self.spec.max_level + 1)
                       for j in np.nonzero(self.faulty[i])[0]],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())


def classify_occupancy(g, spec: TilingSpec, C: float = DEFAULT_C_FAULT,
                       Cprime: float = DEFAULT_CPRIME) -> OccupancyReport:
    """Count vertices per half-tile and flag sparse/faulty/robust status.

    Expected counts use the exact annulus measure clipped at R. A half-tile
    is sparse when its count is strictly below half its expectation; a tile
    is faulty when either half is sparse; robust when no ancestor (itself
    included) is faulty.
    """
    params = spec.params
    R = params.R
    L = spec.max_level
    counts = [np.zeros((spec.N[i], 2), dtype=np.int64) for i in range(L + 1)]
    if g.num_vertices:
        level, idx, side = locate_many(g.points.r, g.points.theta, spec)
        for i in range(L + 1):
            sel = level == i
            if np.any(sel):
                np.add.at(counts[i], (idx[sel], side[sel]), 1)

    expected = np.empty(L + 1)
    for i in range(L + 1):
        shell = mu_ball_origin(min(spec.h_of(i), R), params) - \
            mu_ball_origin(min(spec.h_of(i - 1), R), params)
        expected[i] = params.n * (spec.theta[i] / 2.0) / TWO_PI * shell

    sparse = [counts[i] < 0.5 * expected[i] for i in range(L + 1)]
    faulty = [sparse[i][:, 0] | sparse[i][:, 1] for i in range(L + 1)]
    robust: list[np.ndarray] = []
    for i in range(L + 1):
        ok = ~faulty[i]
        if i > 0:
            ok &= robust[i - 1][np.arange(spec.N[i]) >> 1]
        robust.append(ok)

    rho = rho_threshold(params, C)
    rho_p = rho_prime_threshold(params, Cprime)
    return OccupancyReport(
        spec=spec, C=C, Cprime=Cprime, rho=rho, rho_prime=rho_p,
        ell=_max_level_within(spec, rho), ell_prime=_max_level_within(spec, rho_p),
        counts=counts, expected_half=expected,
        sparse=sparse, faulty=faulty, robust=robust,
    )


# ---------------------------------------------------------------------------
# spacing validation

@dataclass
class SpacingReport:
    passed: bool
    epsilon: float
    worst_slack: float              # max violation minus allowance; <= 0 passes
    per_level: list[dict]

    def __bool__(self) -> bool:
        return self.passed


def validate_spacing(spec: TilingSpec, epsilon: float | None = None) -> SpacingReport:
    """Check both spacing families for all built levels i >= 1.

    Family (a): |h_j - h_i - (j - i) ln 2| <= eps for all 1 <= i <= j.
    Family (b): e^((R - 2 h_i)/2) within a factor e^(eps/2) of theta_i.
    Slacks are reported as (violation - allowance), so positive means fail.
    """
    eps = spec.epsilon if epsilon is None else epsilon
    R = spec.params.R
    L = spec.max_level
    per_level = []
    worst = -math.inf
    for j in range(1, L + 1):
        dev_a = max((abs(spec.h_of(j) - spec.h_of(i) - (j - i) * LN2)
                     for i in range(1, j + 1)), default=0.0)
        slack_a = dev_a - eps
        dev_b = abs(0.5 * (R - 2.0 * spec.h_of(j)) - math.log(spec.theta[j]))
        slack_b = dev_b - 0.5 * eps
        per_level.append({"level": j, "slack_a": slack_a, "slack_b": slack_b})
        worst = max(worst, slack_a, slack_b)
    if L < 1:
        worst = 0.0
    return SpacingReport(passed=worst <= 0.0, epsilon=eps,
                         worst_slack=worst, per_level=per_level)
