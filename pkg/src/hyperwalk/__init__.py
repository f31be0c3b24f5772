"""Hyperbolic random graphs, recursive disk tilings, electrical flows,
and random-walk scaling experiments."""

from hyperwalk.geometry import ModelParams, PolarPoint, hyperbolic_distance, is_edge
from hyperwalk.harness import ExperimentConfig, fit_scaling, run_experiment
from hyperwalk.hrg import (
    HrgGraph,
    build_graph_bucketed,
    build_graph_naive,
    center_subgraph,
    sample_points,
)
from hyperwalk.tiling import TilingSpec, build_tiling, calibrate_c, classify_occupancy

__all__ = [
    "ExperimentConfig",
    "HrgGraph",
    "ModelParams",
    "PolarPoint",
    "TilingSpec",
    "build_graph_bucketed",
    "build_graph_naive",
    "build_tiling",
    "calibrate_c",
    "center_subgraph",
    "classify_occupancy",
    "fit_scaling",
    "hyperbolic_distance",
    "is_edge",
    "run_experiment",
    "sample_points",
]

__version__ = "0.1.0"
