"""Tests for tiling-guided unit flows.

Reference energies are recomputed stage by stage from half-tile vertex
counts, so a disagreement pins down the faulty cascade stage. Crafted
graphs place points inside chosen half-tile boxes (with margins, to stay
clear of boundary roundoff) and wire edges with the quadratic reference
builder, so every geometric edge guarantee holds by construction.
"""

import math

import numpy as np
import pytest
from scipy.stats import spearmanr

import oracles
from hyperwalk.geometry import (
    TWO_PI,
    InvalidArgument,
    ModelParams,
    PolarPoint,
    hyperbolic_distance,
    mu_ball_origin,
)
from hyperwalk.hrg import PointSet, build_graph_naive, graph_from_edge_list
from hyperwalk.tiling import (
    HalfTileId,
    TileId,
    build_tiling,
    half_contains_half,
    parent_half_tile,
    rho_threshold,
    twin_half,
)
from hyperwalk.flows import (
    AugmentedGraph,
    EmptyHalfTile,
    Flow,
    SameVertex,
    add_flows,
    commute_flow,
    commute_levels,
    energy,
    flow_to_csv,
    half_tile_flow,
    half_tile_index,
    source_sink_flow,
    st_flow,
    validate_flow,
)


@pytest.fixture(scope="module")
def spec_4k(params_4k):
    return build_tiling(params_4k, 0.5)


def fill_graph(params, spec, fills, seed=0):
    """Graph whose vertices sit inside prescribed half-tiles.

    fills: list of ((level, index, side), count); vertex ids follow fill
    order, so callers can address individual vertices by offset.
    """
    rng = np.random.default_rng(seed)
    rs, ths = [], []
    for (level, index, side), count in fills:
        r0 = spec.h_of(level - 1)
        r1 = min(spec.h_of(level), params.R)
        a0 = index * spec.theta[level] + side * spec.theta[level] / 2.0
        for _ in range(count):
            rs.append(r0 + (r1 - r0) * rng.uniform(0.1, 0.9))
            ths.append(a0 + spec.theta[level] / 2.0 * rng.uniform(0.1, 0.9))
    pts = PointSet(params=params, r=np.array(rs), theta=np.array(ths))
    return build_graph_naive(pts)


def climb_energy(counts):
    """Energy of a unit cascade up a lineage chain.

    counts: (|half|, |twin|) per chain half, bottom first; the last entry
    only receives, so its twin count is ignored.
    """
    e = 0.0
    for i in range(len(counts) - 1):
        h, w = counts[i]
        ct = h + w
        if w:
            e += h * w * (1.0 / (ct * h)) ** 2
        up = counts[i + 1][0]
        e += ct * up * (1.0 / (ct * up)) ** 2
    return e


class TestFlowContainer:
    def test_antisymmetric_storage(self):
        g = graph_from_edge_list(3, [(0, 1), (1, 2)])
        f = Flow(g, (0,), (2,))
        f.add(1, 0, 0.25)
        assert f.value(0, 1) == -0.25
        assert f.value(1, 0) == 0.25
        f.add(0, 1, 1.0)
        assert f.value(0, 1) == 0.75
        assert f.num_edges() == 1

    def test_self_loop_rejected(self):
        g = graph_from_edge_list(2, [(0, 1)])
        f = Flow(g, (0,), (1,))
        with pytest.raises(AssertionError):
            f.add(1, 1, 0.5)

    def test_non_edge_rejected(self):
        g = graph_from_edge_list(3, [(0, 1), (1, 2)])
        f = Flow(g, (0,), (2,))
        with pytest.raises(AssertionError):
            f.add(0, 2, 0.5)

    def test_energy_empty_and_single_edge(self):
        g = graph_from_edge_list(2, [(0, 1)])
        f = Flow(g, (0,), (1,))
        assert energy(f) == 0.0
        f.add(0, 1, 1.0)
        assert energy(f) == 1.0

    def test_validate_single_edge(self):
        g = graph_from_edge_list(2, [(0, 1)])
        f = Flow(g, (0,), (1,))
        f.add(0, 1, 1.0)
        rep = validate_flow(f)
        assert rep.strength == 1.0
        assert rep.max_node_residual == 0.0
        assert rep.energy == 1.0
        assert rep.balanced

    def test_validate_reports_node_law_violation(self):
        g = graph_from_edge_list(3, [(0, 1), (1, 2)])
        f = Flow(g, (0,), (2,))
        f.add(0, 1, 1.0)
        f.add(1, 2, 1.0 - 1e-3)
        rep = validate_flow(f)
        assert rep.max_node_residual == pytest.approx(1e-3, rel=1e-9)

    def test_validate_flags_unbalanced_sinks(self):
        n, edges = 4, [(0, 1), (0, 2), (0, 3)]
        g = graph_from_edge_list(n, edges)
        f = Flow(g, (0,), (1, 2))
        f.add(0, 1, 0.7)
        f.add(0, 2, 0.3)
        rep = validate_flow(f)
        assert rep.strength == pytest.approx(1.0)
        assert not rep.balanced

    def test_parallel_paths_split(self):
        # 4-cycle, opposite corners: half a unit around each side
        g = graph_from_edge_list(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
        f = Flow(g, (0,), (2,))
        for u, v in [(0, 1), (1, 2)]:
            f.add(u, v, 0.5)
        for u, v in [(0, 3), (3, 2)]:
            f.add(u, v, 0.5)
        rep = validate_flow(f)
        assert rep.strength == pytest.approx(1.0)
        assert rep.max_node_residual == 0.0
        assert rep.energy == pytest.approx(1.0)

    def test_sum_energy_subadditive(self):
        # (a+b)^2 <= 2a^2 + 2b^2 edgewise, so it holds for whole flows
        n, edges = 5, [(i, j) for i in range(5) for j in range(i + 1, 5)]
        g = graph_from_edge_list(n, edges)
        rng = np.random.default_rng(3)
        for _ in range(50):
            f = Flow(g, (0,), (4,))
            h = Flow(g, (1,), (3,))
            for u, v in edges:
                f.add(u, v, float(rng.normal()))
                h.add(u, v, float(rng.normal()))
            s = add_flows(f, h, (0, 1), (3, 4))
            bound = 2.0 * (energy(f) + energy(h))
            assert energy(s) <= bound * (1.0 + 1e-12)

    def test_csv_dump(self):
        g = graph_from_edge_list(3, [(0, 1), (1, 2)])
        f = Flow(g, (0,), (2,))
        f.add(1, 2, 0.125)
        f.add(1, 0, 1.0 / 3.0)
        text = flow_to_csv(f)
        lines = text.strip().split("\n")
        assert lines[0] == "u,v,value"
        assert lines[1] == "0,1,-0.3333333333333333"
        assert lines[2] == "1,2,0.125"
        assert float(lines[1].split(",")[2]) == -1.0 / 3.0


@pytest.fixture(scope="module")
def quad_graph(params_4k, spec_4k):
    return fill_graph(params_4k, spec_4k, [((1, 2, 0), 4)])


@pytest.fixture(scope="module")
def one_level_radius(params_4k, spec_4k):
    """A radius whose guide flow has exactly one recursion level."""
    lo = (1.0 - 1.0 / (2.0 * params_4k.alpha)) * params_4k.R
    rho = rho_threshold(params_4k, 0.5)
    r_w = next(float(r) for r in np.linspace(lo, rho - 1e-9, 400)
               if commute_levels(spec_4k, float(r), 0.5)[1] == 1)
    assert commute_levels(spec_4k, r_w, 0.5) == (3, 1)
    return r_w


class TestSourceSinkFlow:
    def test_source_fan(self, quad_graph, spec_4k):
        f = source_sink_flow(quad_graph, spec_4k, 0, "source")
        rep = validate_flow(f)
        assert rep.strength == pytest.approx(3.0 / 4.0)
        assert rep.max_node_residual == 0.0
        assert rep.energy == pytest.approx(3.0 / 16.0)
        assert rep.balanced
        assert set(f.sink) == {1, 2, 3}

    def test_sink_fan_mirrors(self, quad_graph, spec_4k):
        fs = source_sink_flow(quad_graph, spec_4k, 0, "source")
        ft = source_sink_flow(quad_graph, spec_4k, 0, "sink")
        for u in (1, 2, 3):
            assert ft.value(u, 0) == fs.value(0, u)

    def test_singleton_half_tile(self, params_4k, spec_4k):
        g = fill_graph(params_4k, spec_4k, [((1, 2, 0), 1)])
        f = source_sink_flow(g, spec_4k, 0, "source")
        assert f.num_edges() == 0
        assert validate_flow(f).strength == 0.0

    def test_bad_direction(self, quad_graph, spec_4k):
        with pytest.raises(InvalidArgument):
            source_sink_flow(quad_graph, spec_4k, 0, "both")


class TestHalfTileFlow:
    def test_identical_halves(self, params_4k, spec_4k):
        g = fill_graph(params_4k, spec_4k, [((2, 5, 1), 3)])
        h = HalfTileId(TileId(2, 5), 1)
        f = half_tile_flow(g, spec_4k, h, h)
        assert f.num_edges() == 0
        assert validate_flow(f).strength == 0.0

    def test_twin_halves(self, params_4k, spec_4k):
        g = fill_graph(params_4k, spec_4k, [((2, 5, 0), 2), ((2, 5, 1), 3)])
        f = half_tile_flow(g, spec_4k, HalfTileId(TileId(2, 5), 0),
                           HalfTileId(TileId(2, 5), 1))
        rep = validate_flow(f)
        assert f.num_edges() == 6
        assert all(abs(val) == pytest.approx(1.0 / 6.0) for _, _, val in f.edges())
        assert rep.strength == pytest.approx(1.0)
        assert rep.max_node_residual < 1e-15
        assert rep.energy == pytest.approx(1.0 / 6.0)
        assert rep.balanced

    # chain for the containment cases: (3,5,0) -> (2,2,1) -> (1,1,0)
    SAME_RAY_FILLS = [
        ((3, 5, 0), 2), ((3, 5, 1), 1),
        ((2, 2, 1), 3), ((2, 2, 0), 2),
        ((1, 1, 0), 2),
    ]

    def test_contained_climbs_chain(self, params_4k, spec_4k):
        hs = HalfTileId(TileId(3, 5), 0)
        ht = HalfTileId(TileId(1, 1), 0)
        assert half_contains_half(ht, hs)
        g = fill_graph(params_4k, spec_4k, self.SAME_RAY_FILLS)
        f = half_tile_flow(g, spec_4k, hs, ht)
        rep = validate_flow(f)
        assert rep.strength == pytest.approx(1.0)
        assert rep.max_node_residual < 1e-12
        assert rep.balanced
        want = climb_energy([(2, 1), (3, 2), (2, 0)])
        assert rep.energy == pytest.approx(want, abs=1e-12)

    def test_reverse_containment_negates(self, params_4k, spec_4k):
        hs = HalfTileId(TileId(3, 5), 0)
        ht = HalfTileId(TileId(1, 1), 0)
        g = fill_graph(params_4k, spec_4k, self.SAME_RAY_FILLS)
        fwd = half_tile_flow(g, spec_4k, hs, ht)
        rev = half_tile_flow(g, spec_4k, ht, hs)
        for u, v, val in fwd.edges():
            assert rev.value(u, v) == pytest.approx(-val, abs=1e-15)
        rep = validate_flow(rev)
        assert rep.strength == pytest.approx(1.0)
        assert rep.energy == pytest.approx(energy(fwd), abs=1e-12)

    def test_empty_chain_half_raises(self, params_4k, spec_4k):
        fills = [f for f in self.SAME_RAY_FILLS if f[0] != (2, 2, 1)]
        g = fill_graph(params_4k, spec_4k, fills)
        with pytest.raises(EmptyHalfTile) as err:
            half_tile_flow(g, spec_4k, HalfTileId(TileId(3, 5), 0),
                           HalfTileId(TileId(1, 1), 0))
        assert err.value.half == HalfTileId(TileId(2, 2), 1)

    def test_empty_twin_tolerated(self, params_4k, spec_4k):
        # twins only equalize within a tile; a bare chain still works
        fills = [f for f in self.SAME_RAY_FILLS
                 if f[0] not in ((3, 5, 1), (2, 2, 0))]
        g = fill_graph(params_4k, spec_4k, fills)
        f = half_tile_flow(g, spec_4k, HalfTileId(TileId(3, 5), 0),
                           HalfTileId(TileId(1, 1), 0))
        rep = validate_flow(f)
        assert rep.strength == pytest.approx(1.0)
        assert rep.energy == pytest.approx(climb_energy([(2, 0), (3, 0), (2, 0)]),
                                           abs=1e-12)

    def test_split_lineages_meet_at_common_ancestor(self, params_4k, spec_4k):
        # (2,0,0) lifts through (1,0,0) to (0,0,0); (2,3,1) through
        # (1,1,1) to (0,0,1): twin halves of the level-0 ancestor
        fills = [
            ((2, 0, 0), 2), ((2, 0, 1), 1), ((1, 0, 0), 2), ((1, 0, 1), 3),
            ((0, 0, 0), 2),
            ((2, 3, 1), 1), ((2, 3, 0), 2), ((1, 1, 1), 2), ((1, 1, 0), 1),
            ((0, 0, 1), 3),
        ]
        g = fill_graph(params_4k, spec_4k, fills)
        f = half_tile_flow(g, spec_4k, HalfTileId(TileId(2, 0), 0),
                           HalfTileId(TileId(2, 3), 1))
        rep = validate_flow(f)
        assert rep.strength == pytest.approx(1.0)
        assert rep.max_node_residual < 1e-12
        assert rep.balanced
        want = (climb_energy([(2, 1), (2, 3), (2, 0)])
                + 1.0 / (2 * 3)
                + climb_energy([(1, 2), (2, 1), (3, 0)]))
        assert rep.energy == pytest.approx(want, abs=1e-12)

    def test_different_roots_bridge(self, params_4k, spec_4k):
        # no common ancestor: climb to the root halves and bridge them;
        # both endpoints sit inside radius R/2, so the bridge edges exist
        fills = [
            ((1, 2, 0), 2), ((1, 2, 1), 1), ((0, 1, 0), 3),
            ((0, 3, 1), 2),
        ]
        g = fill_graph(params_4k, spec_4k, fills)
        f = half_tile_flow(g, spec_4k, HalfTileId(TileId(1, 2), 0),
                           HalfTileId(TileId(0, 3), 1))
        rep = validate_flow(f)
        assert rep.strength == pytest.approx(1.0)
        assert rep.max_node_residual < 1e-12
        want = climb_energy([(2, 1), (3, 0)]) + 1.0 / (3 * 2)
        assert rep.energy == pytest.approx(want, abs=1e-12)


class TestStFlow:
    def test_same_vertex_rejected(self, graph_4k, spec_4k):
        with pytest.raises(SameVertex):
            st_flow(graph_4k, spec_4k, 7, 7)

    def test_shared_half_tile_pair(self, params_4k, spec_4k):
        g = fill_graph(params_4k, spec_4k, [((2, 9, 1), 2)])
        f = st_flow(g, spec_4k, 0, 1)
        assert f.num_edges() == 1
        assert f.value(0, 1) == pytest.approx(1.0)
        assert energy(f) == pytest.approx(1.0)

    def test_shared_half_tile_triple(self, params_4k, spec_4k):
        # fans through the third vertex: 2/3 direct, 1/3 relayed
        g = fill_graph(params_4k, spec_4k, [((2, 9, 1), 3)])
        f = st_flow(g, spec_4k, 0, 1)
        rep = validate_flow(f)
        assert rep.strength == pytest.approx(1.0)
        assert rep.max_node_residual < 1e-15
        assert rep.energy == pytest.approx(2.0 / 3.0)
        assert f.value(0, 1) == pytest.approx(2.0 / 3.0)
        assert f.value(0, 2) == pytest.approx(1.0 / 3.0)
        assert f.value(2, 1) == pytest.approx(1.0 / 3.0)

    def test_energy_dominates_effective_resistance(self, params_4k, spec_4k):
        # Thomson: any unit s-t flow dissipates at least R_eff(s, t)
        fills = TestHalfTileFlow.SAME_RAY_FILLS
        g = fill_graph(params_4k, spec_4k, fills)
        us, vs = g.edge_arrays()
        edges = list(zip(us.tolist(), vs.tolist()))
        rmat = oracles.resistance_matrix(g.num_vertices, edges)
        checked = 0
        for s in range(g.num_vertices):
            for t in range(s + 1, g.num_vertices):
                try:
                    f = st_flow(g, spec_4k, s, t)
                except EmptyHalfTile:
                    continue
                rep = validate_flow(f)
                assert rep.strength == pytest.approx(1.0)
                assert rep.energy >= float(rmat[s][t]) - 1e-8
                checked += 1
        assert checked >= 20

    def test_sampled_graph_central_pairs(self, graph_4k, spec_4k):
        # vertices inside h_1 have one- or two-step lineages, so most
        # pairs are constructible on a sampled graph
        r = np.asarray(graph_4k.points.r)
        cand = np.flatnonzero(r < spec_4k.h_of(1)).tolist()
        assert len(cand) >= 8
        ok = 0
        energies = []
        for i, s in enumerate(cand):
            for t in cand[i + 1:]:
                try:
                    f = st_flow(graph_4k, spec_4k, s, t)
                except EmptyHalfTile:
                    continue
                rep = validate_flow(f)
                assert rep.strength == pytest.approx(1.0, abs=1e-9)
                assert rep.max_node_residual < 1e-9
                assert rep.balanced
                ok += 1
                energies.append(rep.energy)
        assert ok >= 10
        # central pairs stay within a constant energy budget
        assert max(energies) < 4.0


class TestCommuteLevels:
    def test_domain_checked(self, params_4k, spec_4k):
        rho = rho_threshold(params_4k, 0.5)
        lo = (1.0 - 1.0 / (2.0 * params_4k.alpha)) * params_4k.R
        with pytest.raises(InvalidArgument):
            commute_levels(spec_4k, lo - 1e-6, 0.5)
        with pytest.raises(InvalidArgument):
            commute_levels(spec_4k, rho, 0.5)

    def test_desk_scale_sweep(self):
        # frozen from a sweep of the dilation ratio
        #   2^k e^(R - h_l') / e^((R - r)/2 + (R - h_l')/2)
        # over every n below: observed range [0.503, 1.774]
        for exp in range(10, 16):
            params = ModelParams(0.7, 1.0, 2 ** exp)
            spec = build_tiling(params, 0.5)
            R = params.R
            rho = rho_threshold(params, 0.5)
            lo = (1.0 - 1.0 / (2.0 * params.alpha)) * R
            assert lo < rho
            ks = set()
            last_k = None
            for r_w in np.linspace(lo, rho - 1e-9, 200):
                lp, k = commute_levels(spec, float(r_w), 0.5)
                assert r_w <= spec.h_of(lp)
                ratio = (2.0 ** k * math.exp(R - spec.h_of(lp))
                         / math.exp((R - r_w) / 2.0 + (R - spec.h_of(lp)) / 2.0))
                assert 1.0 / 64.0 <= ratio <= 64.0
                if last_k is not None:
                    assert k <= last_k  # angular reach shrinks outward
                last_k = k
                ks.add(k)
            assert {0, 1, 2} <= ks

    def test_cprime_does_not_affect_levels(self, spec_4k):
        a = commute_levels(spec_4k, 7.0, 0.5, 2.0)
        b = commute_levels(spec_4k, 7.0, 0.5, 64.0)
        assert a == b


class TestCommuteFlow:
    def test_direct_fanout(self):
        # shallow fault-free frontier: depth 0, no recursion, so the added
        # vertex fans straight into its root half
        params = ModelParams(0.7, 1.0, 256)
        spec = build_tiling(params, 0.5)
        lo = (1.0 - 1.0 / (2.0 * params.alpha)) * params.R
        rho = rho_threshold(params, 0.5)
        assert lo < 4.0 < rho
        assert commute_levels(spec, 4.0, 0.5) == (0, 0)
        g = fill_graph(params, spec, [((0, 0, 0), 3)])
        w = PolarPoint(4.0, 0.1)
        f = commute_flow(g, spec, w, C=0.5, require_nonfaulty=False)
        assert isinstance(f.graph, AugmentedGraph)
        assert f.source == (3,)
        assert f.num_edges() == 3
        rep = validate_flow(f)
        assert rep.strength == pytest.approx(1.0)
        assert rep.energy == pytest.approx(1.0 / 3.0)
        assert rep.balanced

    def test_one_rebalance_stage(self, params_4k, spec_4k, one_level_radius):
        # guide half at level 2 for theta = 0.3 is tile 0 side 1, which
        # covers level-3 cells 2..3, i.e. both halves of tile (3, 1)
        fills = [((2, 0, 1), 2), ((3, 1, 0), 3), ((3, 1, 1), 1)]
        g = fill_graph(params_4k, spec_4k, fills)
        w = PolarPoint(one_level_radius, 0.3)
        f = commute_flow(g, spec_4k, w, C=0.5, require_nonfaulty=False)
        rep = validate_flow(f)
        assert rep.strength == pytest.approx(1.0)
        assert rep.max_node_residual < 1e-12
        assert rep.balanced
        # fan 1/2 into each bottom half, rebalance the (3, 1) split, then
        # ship the tile's unit to the guide half
        want = (0.25 / 3 + 0.25 / 1
                + 3 * 1 * (0.5 * (1.0 / 1 - 1.0 / 3) / 4) ** 2
                + 4 * 2 * (1.0 / (4 * 2)) ** 2)
        assert rep.energy == pytest.approx(want, abs=1e-12)
        out = f.net_out()
        for v in f.sink:
            assert out[v] == pytest.approx(-0.5)

    def test_balanced_halves_skip_rebalance(self, params_4k, spec_4k,
                                            one_level_radius):
        fills = [((2, 0, 1), 2), ((3, 1, 0), 2), ((3, 1, 1), 2)]
        g = fill_graph(params_4k, spec_4k, fills)
        w = PolarPoint(one_level_radius, 0.3)
        f = commute_flow(g, spec_4k, w, C=0.5, require_nonfaulty=False)
        # 4 fan edges + 8 radial edges, no rebalance edges
        assert f.num_edges() == 12
        rep = validate_flow(f)
        assert rep.strength == pytest.approx(1.0)
        assert rep.energy == pytest.approx(2 * 0.25 / 2
                                           + 4 * 2 * (1.0 / (4 * 2)) ** 2,
                                           abs=1e-12)

    def test_empty_descendant_half_raises(self, params_4k, spec_4k,
                                          one_level_radius):
        fills = [((2, 0, 1), 2), ((3, 1, 0), 3)]
        g = fill_graph(params_4k, spec_4k, fills)
        w = PolarPoint(one_level_radius, 0.3)
        with pytest.raises(EmptyHalfTile) as err:
            commute_flow(g, spec_4k, w, C=0.5, require_nonfaulty=False)
        assert err.value.half == HalfTileId(TileId(3, 1), 1)

    def test_faulty_gate_on_sampled_graph(self, graph_4k, spec_4k):
        # sparse frontier tiles make the fault-free hypothesis fail on a
        # desk-scale sample, so the default gate must fire
        w = PolarPoint(6.0, 1.0)
        with pytest.raises(InvalidArgument, match="faulty"):
            commute_flow(graph_4k, spec_4k, w, C=0.5)

    def test_energy_tracks_radius(self):
        # idealized occupancy: one vertex (or the rounded expectation) per
        # half-tile down to the frontier, so every guide flow exists and
        # the energy trend in the radius is isolated from sampling noise
        params = ModelParams(0.7, 1.0, 2 ** 14)
        spec = build_tiling(params, 0.5)
        R = params.R
        rho = rho_threshold(params, 0.5)
        lo = (1.0 - 1.0 / (2.0 * params.alpha)) * R
        depth = max(i for i in range(spec.max_level + 1)
                    if spec.h_of(i) <= rho) + 1
        rng = np.random.default_rng(7)
        fills = []
        for level in range(depth + 1):
            shell = (mu_ball_origin(min(spec.h_of(level), R), params)
                     - mu_ball_origin(min(spec.h_of(level - 1), R), params))
            per_half = params.n * (spec.theta[level] / 2.0) / TWO_PI * shell
            count = max(1, round(per_half))
            for index in range(spec.N[level]):
                fills.append(((level, index, 0), count))
                fills.append(((level, index, 1), count))
        g = fill_graph(params, spec, fills, seed=7)
        energies, predictors = [], []
        for r_w in np.linspace(lo + 1e-6, rho - 1e-6, 60):
            w = PolarPoint(float(r_w), float(rng.uniform(0.0, TWO_PI)))
            f = commute_flow(g, spec, w, C=0.5, require_nonfaulty=False)
            rep = validate_flow(f)
            assert rep.strength == pytest.approx(1.0, abs=1e-9)
            assert rep.max_node_residual < 1e-9
            assert rep.balanced
            energies.append(rep.energy)
            predictors.append(math.exp(-2.0 * params.alpha
                                       * (1.0 - params.alpha) * (R - r_w)))
        corr = spearmanr(energies, predictors).statistic
        assert corr > 0.5


class TestAugmentedGraph:
    def test_adjacency_rules(self, graph_4k, params_4k):
        w = PolarPoint(2.0, 0.5)
        aug = AugmentedGraph(graph_4k, w)
        n = graph_4k.num_vertices
        assert aug.num_vertices == n + 1
        assert aug.extra_id == n
        assert aug.point(n) == w
        assert aug.point(3) == graph_4k.point(3)
        assert not aug.has_edge(n, n)
        assert aug.has_edge(3, 5) == graph_4k.has_edge(3, 5)
        R = params_4k.R
        for v in range(0, n, 97):
            p = graph_4k.point(v)
            want = hyperbolic_distance(w, p) < R
            assert aug.has_edge(n, v) == want
            assert aug.has_edge(v, n) == want
            # the triangle bound guarantees edges into the shrunk ball
            if p.r < R - w.r:
                assert want
