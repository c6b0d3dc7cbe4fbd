import numpy as np
import pytest

from graphshapley import Graph, TrainConfig, init_model, train
from graphshapley import datasets


def random_graph(rng, n=12, p=0.25, num_features=4, num_classes=3,
                 labeled=True):
    """Erdos-Renyi-style test graph with Gaussian features."""
    edges = set()
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.add((i, j))
    # keep it connected enough for path-based code
    for i in range(1, n):
        if not any(i in e for e in edges):
            edges.add((int(rng.integers(i)), i))
    feats = rng.normal(size=(n, num_features))
    labels = rng.integers(num_classes, size=n) if labeled else None
    return Graph(n, frozenset(edges), feats, labels)


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def small_graph(rng):
    return random_graph(rng)


@pytest.fixture
def small_model(small_graph):
    return init_model([small_graph.num_features, 6, 6], 3, seed=7)


@pytest.fixture(scope="session")
def trained_shapes():
    """Small motif benchmark with a briefly trained model, shared across tests."""
    spec = datasets.default_spec("ba-shapes", base_size=30, num_motifs=6,
                                 perturb_edge_fraction=0.05)
    g, truth = datasets.build_synthetic(spec)
    model = init_model([g.num_features, 8, 8], 4, seed=0)
    model, _ = train(model, g, TrainConfig(epochs=120, seed=0))
    return g, truth, model
