"""Exact effective resistances, Kirchhoff index, and sector-cut bounds.

Resistances come from Laplacian solves at unit conductances. Each
connected component gets one immutable solver: a dense Cholesky
factorization of the grounded Laplacian when small, otherwise conjugate
gradients preconditioned with a sparse factorization of the same grounded
matrix. Every solve is checked against a relative residual bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import LinearOperator, cg, splu

from .flows import SameVertex  # noqa: F401  (same error taxonomy as flows)
from .geometry import TWO_PI, InvalidArgument, ModelParams, PolarPoint, mu_ball_origin
from .rng import make_generator

DENSE_CUTOFF = 500
SOLVE_TOL = 1e-10
MATRIX_CAP = 2000
SAMPLED_PAIRS = 1000


class DisconnectedPair(Exception):
    pass


class EmptyCut(Exception):
    pass


def _adjacency_from_edges(n: int, eu: np.ndarray, ev: np.ndarray) -> csr_matrix:
    ones = np.ones(len(eu), dtype=np.int8)
    return csr_matrix((np.r_[ones, ones], (np.r_[eu, ev], np.r_[ev, eu])),
                      shape=(n, n))


class LaplacianSystem:
    """Solver for one connected component's Laplacian, fixed tolerance.

    Immutable after construction; solves for distinct right-hand sides are
    independent and may run concurrently.
    """

    def __init__(self, num_vertices: int, edges_u, edges_v, tol: float = SOLVE_TOL):
        n = int(num_vertices)
        if n < 1:
            raise InvalidArgument("empty vertex set")
        eu = np.asarray(edges_u, dtype=np.int64)
        ev = np.asarray(edges_v, dtype=np.int64)
        adj = _adjacency_from_edges(n, eu, ev)
        ncomp, _ = connected_components(adj, directed=False)
        if ncomp != 1:
            raise InvalidArgument(f"expected one component, got {ncomp}")
        self.num_vertices = n
        self.tol = float(tol)
        deg = np.asarray(adj.sum(axis=1)).ravel().astype(np.float64)
        self.degree = deg
        lap = csr_matrix(
            (np.r_[deg, -np.ones(len(eu)), -np.ones(len(eu))],
             (np.r_[np.arange(n), eu, ev], np.r_[np.arange(n), ev, eu])),
            shape=(n, n))
        self._lap = lap
        grounded = lap[:-1, :][:, :-1]
        if n == 1:
            self._chol = None
            self._lu = None
        elif n <= DENSE_CUTOFF:
            self._chol = cho_factor(grounded.toarray())
            self._lu = None
        else:
            self._chol = None
            self._lu = splu(grounded.tocsc())

    def _precondition(self, z: np.ndarray) -> np.ndarray:
        z = z - z.mean()
        y = np.zeros(self.num_vertices)
        y[:-1] = self._lu.solve(z[:-1])
        return y - y.mean()

    def solve(self, b) -> np.ndarray:
        """Potentials x with L x = b, sum-zero gauge, residual asserted."""
        b = np.asarray(b, dtype=np.float64)
        if b.shape != (self.num_vertices,):
            raise InvalidArgument("right-hand side has the wrong length")
        b = b - b.mean()  # solvability requires b orthogonal to ones
        nb = np.linalg.norm(b)
        if nb == 0.0:
            return np.zeros_like(b)
        if self._chol is not None:
            x = np.zeros_like(b)
            x[:-1] = cho_solve(self._chol, b[:-1])
        else:
            mop = LinearOperator((self.num_vertices,) * 2,
                                 matvec=self._precondition)
            x, info = cg(self._lap, b, rtol=1e-12, atol=0.0, maxiter=500,
                         M=mop)
            assert info == 0, f"conjugate gradient did not converge: {info}"
        x = x - x.mean()
        resid = np.linalg.norm(self._lap @ x - b) / nb
        assert resid <= self.tol, f"solve residual {resid} above {self.tol}"
        return x

    def solve_pair(self, u: int, v: int) -> float:
        """Potential difference x(u) - x(v) for the unit dipole e_u - e_v."""
        b = np.zeros(self.num_vertices)
        b[u] += 1.0
        b[v] -= 1.0
        x = self.solve(b)
        return float(x[u] - x[v])


# ---------------------------------------------------------------------------
# per-graph component plumbing

@dataclass(frozen=True)
class _Components:
    labels: np.ndarray
    num_components: int

    def members(self, label: int) -> np.ndarray:
        return np.nonzero(self.labels == label)[0]


def _component_info(g) -> _Components:
    if "component_labels" not in g._cache:
        ncomp, labels = connected_components(g.adjacency(), directed=False)
        g._cache["component_labels"] = _Components(labels, int(ncomp))
    return g._cache["component_labels"]


def _component_system(g, label: int):
    """(system, global ids, global->local map) for one component, cached."""
    key = ("laplacian", label)
    if key not in g._cache:
        info = _component_info(g)
        ids = info.members(label)
        pos = np.full(g.num_vertices, -1, dtype=np.int64)
        pos[ids] = np.arange(len(ids))
        eu, ev = g.edge_arrays()
        keep = (pos[eu] >= 0) & (pos[ev] >= 0)
        system = LaplacianSystem(len(ids), pos[eu[keep]], pos[ev[keep]])
        g._cache[key] = (system, ids, pos)
    return g._cache[key]


def effective_resistance(g, u: int, v: int) -> float:
    """R_eff(u, v): the energy infimum over unit u-v flows, by duality."""
    if u == v:
        return 0.0
    info = _component_info(g)
    if info.labels[u] != info.labels[v]:
        raise DisconnectedPair(f"vertices {u} and {v} lie in different components")
    system, _, pos = _component_system(g, int(info.labels[u]))
    return system.solve_pair(int(pos[u]), int(pos[v]))


def resistance_matrix(g, cap: int = MATRIX_CAP) -> np.ndarray:
    """All-pairs effective resistances of a connected graph.

    Dense: one grounded factorization, then the standard quadratic form
    on the grounded inverse.
    """
    n = g.num_vertices
    if n > cap:
        raise InvalidArgument(f"{n} vertices exceeds the cap {cap}")
    info = _component_info(g)
    if info.num_components != 1:
        raise DisconnectedPair("resistance matrix needs a connected graph")
    if n == 1:
        return np.zeros((1, 1))
    eu, ev = g.edge_arrays()
    lap = np.zeros((n, n))
    np.add.at(lap, (eu, eu), 1.0)
    np.add.at(lap, (ev, ev), 1.0)
    lap[eu, ev] -= 1.0
    lap[ev, eu] -= 1.0
    ginv = np.zeros((n, n))
    ginv[:-1, :-1] = cho_solve(cho_factor(lap[:-1, :-1]), np.eye(n - 1))
    d = np.diag(ginv)
    return d[:, None] + d[None, :] - 2.0 * ginv


@dataclass(frozen=True)
class KirchhoffResult:
    kirchhoff: float
    average: float
    ci_halfwidth: float
    sampled: bool


def kirchhoff_and_average(g, cap: int = MATRIX_CAP,
                          num_pairs: int = SAMPLED_PAIRS,
                          seed: int = 0) -> KirchhoffResult:
    """Sum of resistances over ordered pairs, and its per-pair average.

    Exact through the all-pairs matrix up to the cap; above it, a mean
    over uniformly sampled ordered pairs with a normal-approximation
    confidence interval (95%).
    """
    n = g.num_vertices
    if n <= cap:
        rmat = resistance_matrix(g, cap)
        total = float(rmat.sum())
        return KirchhoffResult(kirchhoff=total, average=total / n ** 2,
                               ci_halfwidth=0.0, sampled=False)
    info = _component_info(g)
    if info.num_components != 1:
        raise DisconnectedPair("Kirchhoff index needs a connected graph")
    system, _, _ = _component_system(g, int(info.labels[0]))
    rng = make_generator(seed, n)
    us = rng.integers(0, n, size=num_pairs)
    vs = rng.integers(0, n - 1, size=num_pairs)
    vs[vs >= us] += 1  # uniform over ordered pairs with u != v
    vals = np.array([system.solve_pair(int(u), int(v))
                     for u, v in zip(us, vs)])
    mean = float(vals.mean())
    # ordered pairs with u != v are n(n-1) of n^2; the diagonal is zero
    scale = (n - 1) / n
    avg = mean * scale
    ci = 1.96 * float(vals.std(ddof=1)) / math.sqrt(num_pairs) * scale
    return KirchhoffResult(kirchhoff=avg * n ** 2, average=avg,
                           ci_halfwidth=ci, sampled=True)


# ---------------------------------------------------------------------------
# sector cuts

@dataclass(frozen=True)
class CutSpec:
    """An angular-sector edge cut: apex, central angle, crossing edges."""

    apex: PolarPoint
    phi: float
    edges: tuple[tuple[int, int], ...]
    inside: tuple[int, ...]


def sector_cut(g, p: PolarPoint, phi: float) -> CutSpec:
    """Edges with exactly one endpoint in the sector bisected by p.

    Sector membership is half-open in the offset theta_p - theta_q:
    inside means -phi/2 <= offset < phi/2 after wrapping to [-pi, pi).
    """
    if not (0.0 < phi < TWO_PI):
        raise InvalidArgument(f"central angle must lie in (0, 2 pi): {phi}")
    off = np.mod(p.theta - np.asarray(g.points.theta) + math.pi, TWO_PI) - math.pi
    inside = (off >= -phi / 2.0) & (off < phi / 2.0)
    eu, ev = g.edge_arrays()
    crossing = inside[eu] ^ inside[ev]
    edges = tuple(sorted((int(min(a, b)), int(max(a, b)))
                         for a, b in zip(eu[crossing], ev[crossing])))
    return CutSpec(apex=p, phi=float(phi), edges=edges,
                   inside=tuple(np.flatnonzero(inside).tolist()))


def default_omega(params: ModelParams) -> float:
    """Slowly growing separation exponent: log log n."""
    return math.log(math.log(params.n))


def phi_r(r: float, params: ModelParams, omega: float) -> float:
    """Central angle whose sector isolates a radius-r vertex cheaply.

    Evaluates 2 pi nu e^-omega / (n mu(B_O(r))) with the exact ball
    measure. Defined for radii strictly inside the disk above the flow
    domain's floor; the boundary r = R is allowed and gives
    2 pi nu e^-omega / n exactly.
    """
    R = params.R
    lo = (1.0 - 1.0 / (2.0 * params.alpha)) * R
    if not (lo < r <= R):
        raise InvalidArgument(f"radius {r} outside ({lo}, {R}]")
    return TWO_PI * params.nu * math.exp(-omega) / (params.n * mu_ball_origin(r, params))


def nash_williams_lower(cut: CutSpec) -> float:
    """1/|cut|: a lower bound on R_eff across any separating cut."""
    if not cut.edges:
        raise EmptyCut("cut has no edges")
    return 1.0 / len(cut.edges)
