"""
Shared fixtures for the EntroWire test suite.
"""

import os
import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from src.graph import Graph
from src.graph.loader import export_content, export_edgelist

DATA_DIR = Path(__file__).parent / "data"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running training or search tests")


def make_random_graph(seed: int, n: int = 8, p: float = 0.3, d: int = 3, classes: int = 2) -> Graph:
    """Seeded Erdos-Renyi graph with Gaussian features and cyclic labels."""
    rng = np.random.default_rng(seed)
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    features = rng.standard_normal((n, d))
    labels = np.arange(n) % classes
    return Graph.build(features, labels, pairs)


def make_split_graph(seed: int = 0, per_class: int = 10, classes: int = 2, d: int = 4,
                     p_in: float = 0.1, p_out: float = 0.3) -> Graph:
    """Heterophilic graph with informative features and enough nodes per class to split."""
    rng = np.random.default_rng(seed)
    n = per_class * classes
    labels = np.repeat(np.arange(classes), per_class)
    centres = 2.0 * rng.standard_normal((classes, d))
    features = centres[labels] + 0.5 * rng.standard_normal((n, d))
    pairs = []
    for u in range(n):
        for v in range(u + 1, n):
            p = p_in if labels[u] == labels[v] else p_out
            if rng.random() < p:
                pairs.append((u, v))
    return Graph.build(features, labels, pairs)


def dataset_dir(name: str) -> Path:
    """Path to a raw dataset under data/, skipping the test when it is absent."""
    path = DATA_DIR / name
    if not path.is_dir():
        pytest.skip(f"dataset '{name}' not available under {DATA_DIR}")
    return path


@pytest.fixture
def path_graph() -> Graph:
    """P3: 0 - 1 - 2."""
    return Graph.build(np.eye(3), [0, 1, 0], [(0, 1), (1, 2)])


@pytest.fixture
def triangle_graph() -> Graph:
    return Graph.build(np.eye(3), [0, 0, 1], [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def star_graph() -> Graph:
    """K_{1,4} with centre 0."""
    return Graph.build(np.ones((5, 2)), [0, 1, 1, 0, 1], [(0, 1), (0, 2), (0, 3), (0, 4)])


@pytest.fixture
def toy_graph() -> Graph:
    """Four nodes, two classes, separable by the first feature."""
    features = np.array([[1.0, 0.0], [1.0, 0.2], [-1.0, 0.1], [-1.0, -0.1]])
    return Graph.build(features, [0, 0, 1, 1], [(0, 1), (1, 2), (2, 3)])


@pytest.fixture
def split_graph() -> Graph:
    return make_split_graph()


@pytest.fixture
def dataset_on_disk(tmp_path, split_graph) -> Path:
    """The split graph written as a content/cites dataset directory."""
    directory = tmp_path / "toy"
    export_content(split_graph, directory / "toy.content")
    export_edgelist(split_graph, directory / "toy.cites")
    return directory


@pytest.fixture
def isolated_config(tmp_path, monkeypatch):
    """Global configuration pointed at temporary log and output locations."""
    from src.utils import config as config_module

    monkeypatch.setenv("RARE_LOG_FILE_PATH", str(tmp_path / "logs" / "entrowire.log"))
    monkeypatch.setenv("RARE_OUTPUT_DIR", str(tmp_path / "runs"))
    monkeypatch.setenv("RARE_THREADS", "1")
    cfg = config_module.reload_config()
    yield cfg
    config_module.config = None
