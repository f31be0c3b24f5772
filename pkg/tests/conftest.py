import numpy as np
import pytest

from hyperwalk.geometry import ModelParams
from hyperwalk.hrg import build_graph_bucketed, center_subgraph, sample_points


@pytest.fixture(scope="session")
def params_4k():
    return ModelParams(alpha=0.7, nu=1.0, n=4096)


@pytest.fixture(scope="session")
def graph_4k(params_4k):
    return build_graph_bucketed(sample_points(params_4k, "poissonized", seed=11))


@pytest.fixture(scope="session")
def center_4k(graph_4k):
    sub, orig = center_subgraph(graph_4k)
    return sub


def make_path(k):
    """Path graph on k vertices as (n, edges) for oracle comparisons."""
    return k, [(i, i + 1) for i in range(k - 1)]


def make_cycle(k):
    return k, [(i, (i + 1) % k) for i in range(k)]


def make_complete(k):
    return k, [(i, j) for i in range(k) for j in range(i + 1, k)]
