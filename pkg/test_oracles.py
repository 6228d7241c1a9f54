"""
Tests of the brute-force reference implementations themselves.
"""
import sys
import os
import ast
import math

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from src.entropy import feature_entropy
from src.entropy.sequences import EntropySequence
from src.gnn import init_model
from src.graph import Graph, homophily_ratio
from src.oracles import (OracleError, oracle_best_state, oracle_edit_sets, oracle_entropy, oracle_grad,
                         oracle_ranked_states, oracle_rewire)
from src.oracles import brute_force
from src.rl import RewireState


@pytest.fixture
def chain_sequences():
    """Path 0-1-2-3 with labels [0, 0, 1, 1] and hand-ranked candidate lists."""
    graph = Graph.build(np.zeros((4, 1)), [0, 0, 1, 1], [(0, 1), (1, 2), (2, 3)])
    sequences = EntropySequence(
        add_candidates=(np.array([2, 3]), np.array([3]), np.array([0]), np.array([0, 1])),
        delete_candidates=(np.array([1]), np.array([2, 0]), np.array([1, 3]), np.array([2])),
    )
    return graph, sequences


def test_oracle_uniform_pair_entropy():
    graph = Graph.build(np.zeros((2, 1)), [0, 1], [])
    result = oracle_entropy(graph, np.zeros((2, 3)), lam=0.0)
    assert all(v == pytest.approx(0.346574, abs=1e-6) for row in result["feature"] for v in row)
    assert result["combined"] == result["feature"]


def test_oracle_orders_similar_pairs_higher():
    z = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
    graph = Graph.build(z, [0, 1, 0], [])
    h = oracle_entropy(graph, z, lam=1.0)["feature"]
    assert h[0][2] > h[0][1]
    p = math.e / (5 * math.e + 4)
    assert h[0][2] == pytest.approx(-p * math.log(p))
    assert np.allclose(feature_entropy(z), h, atol=1e-12, rtol=0)


def test_oracle_set_algebra(chain_sequences):
    graph, sequences = chain_sequences
    state = RewireState(k=np.array([1, 0, 0, 0]), d=np.array([0, 1, 0, 0]))
    removals, additions = oracle_edit_sets(state, sequences)
    assert removals == {(1, 2)}
    assert additions == {(0, 2)}
    assert oracle_rewire(graph, state, sequences) == {(0, 1), (0, 2), (2, 3)}


def test_ranked_states_enumerates_every_admissible_state(chain_sequences):
    graph, sequences = chain_sequences
    ranked = oracle_ranked_states(graph, sequences, lambda state, rewired: 0.0)
    # k ranges 3, 2, 2, 3 and d ranges 2, 3, 3, 2
    assert len(ranked) == 36 * 36
    first, _ = ranked[0]
    assert not first.k.any() and not first.d.any()


def test_best_state_penalising_edits_is_zero(chain_sequences):
    graph, sequences = chain_sequences
    state, score = oracle_best_state(graph, sequences, lambda s, g: -float(s.k.sum() + s.d.sum()))
    assert score == 0.0
    assert not state.k.any() and not state.d.any()


def test_best_state_constant_evaluator_ties_to_zero(chain_sequences):
    graph, sequences = chain_sequences
    state, _ = oracle_best_state(graph, sequences, lambda s, g: 1.0)
    assert not state.k.any() and not state.d.any()


def test_best_state_by_homophily(chain_sequences):
    graph, sequences = chain_sequences

    def evaluator(state, rewired):
        return homophily_ratio(rewired) if rewired.num_edges else -1.0

    state, score = oracle_best_state(graph, sequences, evaluator)
    assert score == 1.0
    assert state.k.tolist() == [0, 0, 0, 0]
    assert state.d.tolist() == [0, 0, 1, 0]


def test_search_size_limit():
    graph = Graph.build(np.zeros((7, 1)), [0] * 7, [])
    sequences = EntropySequence(add_candidates=tuple(np.array([], dtype=np.int64) for _ in range(7)),
                                delete_candidates=tuple(np.array([], dtype=np.int64) for _ in range(7)))
    with pytest.raises(OracleError):
        oracle_ranked_states(graph, sequences, lambda s, g: 0.0)


def test_grad_size_limit():
    graph = Graph.build(np.ones((9, 2)), [0, 1] * 4 + [0], [])
    model = init_model("gcn", 2, 2, 2, 0.0, np.random.default_rng(0))
    with pytest.raises(OracleError):
        oracle_grad(model, graph, graph.features, graph.labels, np.ones(9, dtype=bool))


def test_oracles_share_no_entropy_kernel():
    tree = ast.parse(open(brute_force.__file__).read())
    imported = [node.module or "" for node in ast.walk(tree) if isinstance(node, ast.ImportFrom)]
    assert not any("entropy" in name for name in imported)
