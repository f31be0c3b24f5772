"""Command-line front end: sampling, inspection, solves, walks, and sweeps.

Every numeric cell prints with 17 significant digits so output round-trips
back to the exact double.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from hyperwalk.flows import EmptyHalfTile, commute_flow, st_flow, validate_flow
from hyperwalk.geometry import InvalidArgument, ModelParams, PolarPoint
from hyperwalk.harness import (
    ExperimentConfig,
    fit_scaling,
    format_float,
    parse_config,
    rows_from_csv,
    rows_to_csv,
    run_experiment,
)
from hyperwalk.hrg import (
    HrgGraph,
    SampleMode,
    build_graph_bucketed,
    center_subgraph,
    components_and_center,
    graph_from_json,
    graph_to_json,
    induced_subgraph,
    sample_points,
)
from hyperwalk.resistance import (
    DisconnectedPair,
    default_omega,
    kirchhoff_and_average,
    nash_williams_lower,
    phi_r,
    resistance_matrix,
    sector_cut,
)
from hyperwalk.tiling import (
    DEFAULT_C_FAULT,
    DEFAULT_CPRIME,
    build_tiling,
    calibrate_c,
    classify_occupancy,
    validate_spacing,
)
from hyperwalk.walks import (
    StepCapExceeded,
    WalkConfig,
    simulate_commute,
    simulate_cover,
    simulate_hitting,
)

_F = format_float


def _load_graph(path: str) -> HrgGraph:
    with open(path) as fh:
        return graph_from_json(fh.read())


def _tiling_for(g: HrgGraph, c_arg: str):
    c = calibrate_c(g.params) if c_arg == "auto" else float(c_arg)
    return build_tiling(g.params, c), c


def _cmd_sample(args) -> int:
    params = ModelParams(alpha=args.alpha, nu=args.nu, n=args.n)
    mode = ("poissonized" if args.binomial is None
            else SampleMode.binomial(args.binomial))
    g = build_graph_bucketed(sample_points(params, mode, args.seed))
    with open(args.out, "w") as fh:
        fh.write(graph_to_json(g))
    print(f"vertices {g.num_vertices} edges {g.indices.shape[0] // 2} out {args.out}")
    return 0


def _cmd_graph(args) -> int:
    g = _load_graph(args.file)
    deg = g.degrees
    print(f"vertices {g.num_vertices}")
    print(f"edges {g.indices.shape[0] // 2}")
    if g.num_vertices:
        print(f"mean_degree {_F(deg.mean())}")
        print(f"max_degree {int(deg.max())}")
    info = components_and_center(g)
    print(f"components {info.num_components}")
    if info.center_label is None:
        print("center_vertices 0")
        print("center_edges 0")
    else:
        sub, _ = induced_subgraph(g, info.members(info.center_label))
        print(f"center_vertices {sub.num_vertices}")
        print(f"center_edges {sub.indices.shape[0] // 2}")
    return 0


def _cmd_tiling(args) -> int:
    g = _load_graph(args.file)
    spec, c = _tiling_for(g, args.c)
    spacing = validate_spacing(spec)
    print(f"c {_F(c)}")
    print(f"R {_F(g.params.R)}")
    print(f"levels {spec.max_level + 1}")
    print(f"sectors_level0 {spec.N[0]}")
    print(f"spacing_ok {spacing.passed}")
    for i in range(spec.max_level + 1):
        print(f"h {i} {_F(spec.h_of(i))}")
    if args.classify:
        report = classify_occupancy(g, spec, args.C, args.Cprime)
        print(f"rho {_F(report.rho)}")
        print(f"rho_prime {_F(report.rho_prime)}")
        print(f"ell {report.ell}")
        print(f"ell_prime {report.ell_prime}")
        for lvl in report.to_json_dict()["levels"]:
            print("level {level} sectors {sectors} vertices {vertices} "
                  "sparse {sparse_halves} faulty {faulty_tiles} "
                  "robust {robust_tiles}".format(**lvl))
    return 0


def _cmd_resist(args) -> int:
    g = _load_graph(args.file)
    center, _ = center_subgraph(g)
    if args.exact_matrix:
        rmat = resistance_matrix(center)
        for row in rmat:
            print(",".join(_F(x) for x in row))
        return 0
    if args.cut is not None:
        idx = int(np.argmin(np.abs(center.points.r - args.cut)))
        apex = center.point(idx)
        omega = args.omega if args.omega is not None else default_omega(g.params)
        phi = phi_r(apex.r, g.params, omega)
        cut = sector_cut(center, apex, phi)
        print(f"apex {idx}")
        print(f"apex_r {_F(apex.r)}")
        print(f"omega {_F(omega)}")
        print(f"phi {_F(phi)}")
        print(f"cut_edges {len(cut.edges)}")
        if cut.edges:
            print(f"resistance_lower_bound {_F(nash_williams_lower(cut))}")
        return 0
    res = kirchhoff_and_average(center, num_pairs=args.pairs, seed=args.seed)
    print(f"pairs {args.pairs}")
    print(f"sampled {res.sampled}")
    print(f"avg_resistance {_F(res.average)}")
    print(f"avg_resistance_ci {_F(res.ci_halfwidth)}")
    print(f"kirchhoff_estimate {_F(res.kirchhoff)}")
    return 0


def _cmd_flow(args) -> int:
    g = _load_graph(args.file)
    spec, c = _tiling_for(g, args.c)
    if args.commute:
        if args.r is None:
            raise InvalidArgument("--commute needs --r")
        w = PolarPoint(args.r, args.theta)
        f = commute_flow(g, spec, w, C=args.C, Cprime=args.Cprime,
                         require_nonfaulty=not args.allow_faulty)
    else:
        if args.s is None or args.t is None:
            raise InvalidArgument("need --s and --t (or --commute --r)")
        f = st_flow(g, spec, args.s, args.t)
    report = validate_flow(f)
    print(f"c {_F(c)}")
    print(f"strength {_F(report.strength)}")
    print(f"max_node_residual {_F(report.max_node_residual)}")
    print(f"energy {_F(report.energy)}")
    print(f"support_edges {f.num_edges()}")
    print(f"balanced {report.balanced}")
    return 0


def _cmd_walk(args) -> int:
    g = _load_graph(args.file)
    cfg = WalkConfig(seed=args.seed, repetitions=args.reps, max_steps=args.max_steps)
    if args.hit is not None:
        est = simulate_hitting(g, args.hit[0], args.hit[1], cfg)
        kind = "hit"
    elif args.commute is not None:
        est = simulate_commute(g, args.commute[0], args.commute[1], cfg)
        kind = "commute"
    else:
        info = components_and_center(g)
        comp = info.members(int(info.labels[args.start]))
        sub, orig = induced_subgraph(g, comp)
        local = int(np.searchsorted(orig, args.start))
        est = simulate_cover(sub, local, cfg)
        kind = f"cover (component of {args.start}, {sub.num_vertices} vertices)"
    print(f"walk {kind}")
    print(f"mean {_F(est.mean)}")
    print(f"stderr {_F(est.stderr)}")
    print(f"repetitions {len(est.samples)}")
    return 0


def _cmd_experiment(args) -> int:
    text = ""
    if args.config:
        with open(args.config) as fh:
            text = fh.read()
    overrides: dict[str, str] = {}
    for key in ("alpha", "nu", "n_values", "seeds_per_n", "quantities",
                "master_seed", "mc_reps", "num_pairs", "num_targets",
                "num_flow_pairs", "tiling_c", "fault_C", "fault_Cprime",
                "workers", "record_timings"):
        val = getattr(args, key)
        if val is not None:
            overrides[key] = val
    if args.out is not None:
        overrides["output"] = args.out
    cfg = parse_config(text, overrides)
    rows = run_experiment(cfg)
    failed = sum(1 for r in rows if r.errors)
    if cfg.output:
        print(f"rows {len(rows)} failed {failed} out {cfg.output}")
    else:
        sys.stdout.write(rows_to_csv(rows))
    return 0


def _cmd_fit(args) -> int:
    with open(args.csv) as fh:
        rows = rows_from_csv(fh.read())
    fit = fit_scaling(rows, args.quantity, args.model)
    print(f"quantity {args.quantity}")
    print(f"model {args.model}")
    print(f"band {_F(fit.band)}")
    print(f"exponent {_F(fit.exponent)}")
    print(f"exponent_stderr {_F(fit.exponent_stderr)}")
    for n, mean in fit.per_n:
        print(f"mean {n} {_F(mean)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="hyperwalk")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample a graph and write JSON")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--binomial", type=int, default=None,
                   help="fixed vertex count instead of the Poisson draw")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_sample)

    p = sub.add_parser("graph", help="inspect a graph file")
    p.add_argument("action", choices=["stats"])
    p.add_argument("file")
    p.set_defaults(fn=_cmd_graph)

    p = sub.add_parser("tiling", help="build the disk tiling, optionally classify occupancy")
    p.add_argument("file")
    p.add_argument("--c", default="auto", help="spacing constant, or 'auto' to calibrate")
    p.add_argument("--classify", action="store_true")
    p.add_argument("--C", type=float, default=DEFAULT_C_FAULT)
    p.add_argument("--Cprime", type=float, default=DEFAULT_CPRIME)
    p.set_defaults(fn=_cmd_tiling)

    p = sub.add_parser("resist", help="resistance queries on the center component")
    p.add_argument("file")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--pairs", type=int, default=1000)
    group.add_argument("--exact-matrix", action="store_true")
    group.add_argument("--cut", type=float, default=None, metavar="APEX_R",
                       help="sector-cut lower bound at the vertex nearest this radius")
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_resist)

    p = sub.add_parser("flow", help="construct and validate a unit flow")
    p.add_argument("file")
    p.add_argument("--s", type=int, default=None)
    p.add_argument("--t", type=int, default=None)
    p.add_argument("--commute", action="store_true")
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--c", default="auto")
    p.add_argument("--C", type=float, default=DEFAULT_C_FAULT)
    p.add_argument("--Cprime", type=float, default=DEFAULT_CPRIME)
    p.add_argument("--allow-faulty", action="store_true")
    p.set_defaults(fn=_cmd_flow)

    p = sub.add_parser("walk", help="Monte Carlo walk estimates")
    p.add_argument("file")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--hit", type=int, nargs=2, metavar=("U", "V"))
    group.add_argument("--cover", action="store_true")
    group.add_argument("--commute", type=int, nargs=2, metavar=("U", "V"))
    p.add_argument("--start", type=int, default=0, help="cover-walk start vertex")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steps", type=int, default=10**9)
    p.set_defaults(fn=_cmd_walk)

    p = sub.add_parser("experiment", help="run a scaling sweep")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None)
    for key in ("n_values", "quantities"):
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None)
    for key in ("alpha", "nu", "tiling_c", "fault_C", "fault_Cprime"):
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None)
    for key in ("seeds_per_n", "master_seed", "mc_reps", "num_pairs",
                "num_targets", "num_flow_pairs", "workers"):
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None)
    p.add_argument("--record-timings", dest="record_timings", default=None,
                   choices=["true", "false"])
    p.set_defaults(fn=_cmd_experiment)

    p = sub.add_parser("fit", help="fit a scaling law to experiment CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--quantity", required=True)
    p.add_argument("--model", required=True, choices=["n", "nlogn", "nlog2n", "n2"])
    p.set_defaults(fn=_cmd_fit)

    return top


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (InvalidArgument, EmptyHalfTile, DisconnectedPair,
            StepCapExceeded, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
