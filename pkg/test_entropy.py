"""
Tests for feature, structural and relative entropy and the entropy sequences.
"""
import sys
import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from conftest import make_random_graph
from src.entropy import (EmbeddingConfig, EntropyError, EntropyTableFormatError, blockwise_sequences,
                         build_sequences, compute_entropy, degree_profile, embed, export_matrix_csv,
                         feature_entropy, load_table, relative_entropy, save_table, shuffle_sequences,
                         structural_entropy)
from src.graph import Graph
from src.oracles import oracle_entropy, oracle_sequences


# ------------------------------------------------------------------
# Feature entropy
# ------------------------------------------------------------------

def test_feature_entropy_uniform_pair():
    h = feature_entropy(np.zeros((2, 3)))
    assert np.allclose(h, 0.25 * np.log(4.0))
    assert h[0, 0] == pytest.approx(0.346574, abs=1e-6)


def test_feature_entropy_without_self_pairs():
    h = feature_entropy(np.zeros((3, 2)), include_self_pairs=False)
    assert h[0, 1] == pytest.approx(np.log(6.0) / 6.0)


def test_feature_entropy_rejects_single_node():
    with pytest.raises(EntropyError):
        feature_entropy(np.zeros((1, 2)))


def test_feature_entropy_rejects_non_finite():
    with pytest.raises(EntropyError):
        feature_entropy(np.array([[0.0], [np.inf]]))


def test_feature_entropy_handles_large_dot_products():
    z = np.array([[30.0, 0.0], [0.0, 30.0], [30.0, 30.0]])
    h = feature_entropy(z)
    assert np.isfinite(h).all()
    assert (h >= 0).all()


# ------------------------------------------------------------------
# Structural entropy
# ------------------------------------------------------------------

def test_degree_profile_path(path_graph):
    middle = degree_profile(path_graph, 1)
    assert middle.sequence.tolist() == [2, 1, 1]
    assert np.allclose(middle.distribution, [0.5, 0.25, 0.25])
    end = degree_profile(path_graph, 0)
    assert end.sequence.tolist() == [2, 1, 0]


def test_degree_profile_star_centre(star_graph):
    centre = degree_profile(star_graph, 0)
    assert centre.sequence.tolist() == [4, 1, 1, 1, 1]
    assert np.allclose(centre.distribution, [0.5, 0.125, 0.125, 0.125, 0.125])


def test_isolated_node_profile():
    graph = Graph.build(np.zeros((3, 1)), [0, 1, 0], [(0, 1)])
    assert degree_profile(graph, 2).distribution.tolist() == [1.0, 0.0]


def test_structural_entropy_path_values(path_graph):
    h = structural_entropy(path_graph)
    assert h[0, 2] == pytest.approx(1.0)
    assert np.allclose(np.diag(h), 1.0)
    oracle = oracle_entropy(path_graph, np.zeros((3, 1)), lam=1.0)
    assert np.allclose(h, oracle["structural"], atol=1e-9, rtol=0)


@settings(max_examples=1000, deadline=None)
@given(st.integers(min_value=0, max_value=100_000), st.integers(min_value=2, max_value=12))
def test_structural_entropy_bounds_and_symmetry(seed, n):
    h = structural_entropy(make_random_graph(seed, n=n, p=0.35))
    assert (h >= 0.0).all() and (h <= 1.0).all()
    assert np.array_equal(np.diag(h), np.ones(n))
    assert np.abs(h - h.T).max() <= 1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=100_000), st.integers(min_value=2, max_value=10))
def test_entropy_is_permutation_equivariant(seed, n):
    graph = make_random_graph(seed, n=n, p=0.4)
    perm = np.random.default_rng(seed).permutation(n)
    table = compute_entropy(graph, lam=0.5)
    permuted = compute_entropy(graph.permuted(perm), lam=0.5)
    for name in ("feature", "structural", "combined"):
        matrix = getattr(table, name)
        assert np.allclose(matrix[perm][:, perm], getattr(permuted, name), atol=1e-12, rtol=0), name


def test_structural_entropy_blocks_and_threads_agree():
    graph = make_random_graph(11, n=30, p=0.2)
    reference = structural_entropy(graph)
    assert np.array_equal(structural_entropy(graph, workers=4, block_rows=7), reference)


# ------------------------------------------------------------------
# Relative entropy against the oracle
# ------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(100))
def test_relative_entropy_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 13))
    d = int(rng.integers(1, 6))
    graph = make_random_graph(seed, n=n, p=0.3, d=d)
    lam = float(rng.uniform(0.0, 3.0))
    table = compute_entropy(graph, lam=lam)
    oracle = oracle_entropy(graph, graph.features, lam)
    for name in ("feature", "structural", "combined"):
        assert np.allclose(getattr(table, name), oracle[name], atol=1e-9, rtol=0), name


def test_lambda_zero_is_feature_only(split_graph):
    table = compute_entropy(split_graph, lam=0.0)
    assert np.array_equal(table.combined, table.feature)


def test_relative_entropy_rejects_negative_lambda():
    with pytest.raises(EntropyError):
        relative_entropy(np.zeros((2, 2)), np.zeros((2, 2)), -1.0)


def test_pair_probabilities_sum_to_one():
    for seed in range(20):
        graph = make_random_graph(seed, n=10, d=4)
        h = feature_entropy(graph.features)
        # recover P from -P log P via the exact softmax of the gram matrix
        gram = graph.features @ graph.features.T
        p = np.exp(gram - gram.max())
        p /= p.sum()
        assert p.sum() == pytest.approx(1.0, abs=1e-9)
        assert np.allclose(h, -p * np.log(p), atol=1e-12)


# ------------------------------------------------------------------
# Embedding
# ------------------------------------------------------------------

def test_embedding_modes():
    x = np.arange(12, dtype=float).reshape(4, 3)
    assert np.array_equal(embed(x, EmbeddingConfig.auto(3)), x)
    projected = embed(x, EmbeddingConfig(target_dim=2, projection_seed=5, mode="project"))
    assert projected.shape == (4, 2)
    again = embed(x, EmbeddingConfig(target_dim=2, projection_seed=5, mode="project"))
    assert np.array_equal(projected, again)
    assert EmbeddingConfig.auto(100, max_dim=64).mode == "project"
    zeros = embed(np.zeros((4, 3)), EmbeddingConfig(target_dim=2, projection_seed=1, mode="project"))
    assert not zeros.any()


# ------------------------------------------------------------------
# Sequences
# ------------------------------------------------------------------

def test_sequences_match_oracle():
    for seed in range(20):
        graph = make_random_graph(seed, n=9, p=0.35)
        table = compute_entropy(graph, lam=1.0)
        sequences = build_sequences(table, graph)
        add, delete = oracle_sequences(table.combined, graph)
        assert [a.tolist() for a in sequences.add_candidates] == add
        assert [d.tolist() for d in sequences.delete_candidates] == delete


def test_complete_graph_has_no_add_candidates(triangle_graph):
    sequences = build_sequences(compute_entropy(triangle_graph), triangle_graph)
    assert all(a.size == 0 for a in sequences.add_candidates)


def test_delete_candidates_lowest_first():
    graph = Graph.build(np.zeros((8, 1)), [0] * 8, [(0, 3), (0, 7)])
    combined = np.zeros((8, 8))
    combined[0, 3] = combined[3, 0] = 0.1
    combined[0, 7] = combined[7, 0] = 0.9
    table = relative_entropy(combined, np.zeros((8, 8)), 1.0)
    assert build_sequences(table, graph).delete_candidates[0].tolist() == [3, 7]


def test_sequences_tie_break_by_id():
    graph = Graph.build(np.zeros((4, 1)), [0, 1, 0, 1], [])
    table = compute_entropy(graph, lam=1.0)
    sequences = build_sequences(table, graph)
    assert sequences.add_candidates[0].tolist() == [1, 2, 3]
    assert sequences.add_candidates[3].tolist() == [0, 1, 2]


def test_sequences_cover_neighbourhoods(split_graph):
    sequences = build_sequences(compute_entropy(split_graph), split_graph)
    n = split_graph.num_nodes
    for v in range(n):
        neighbours = set(split_graph.neighbors(v).tolist())
        assert set(sequences.delete_candidates[v].tolist()) == neighbours
        assert set(sequences.add_candidates[v].tolist()) == set(range(n)) - neighbours - {v}


def test_truncated_and_shuffled(split_graph):
    sequences = build_sequences(compute_entropy(split_graph), split_graph)
    truncated = sequences.truncated(3)
    assert (truncated.add_lengths() <= 3).all()
    shuffled = shuffle_sequences(sequences, np.random.default_rng(0))
    for a, b in zip(sequences.add_candidates, shuffled.add_candidates):
        assert sorted(a.tolist()) == sorted(b.tolist())


def test_blockwise_matches_dense_prefix(split_graph):
    table = compute_entropy(split_graph, lam=0.7, embedding=EmbeddingConfig.auto(split_graph.num_features))
    dense = build_sequences(table, split_graph, max_add=5)
    blockwise = blockwise_sequences(split_graph, split_graph.features, 0.7, top_c=5, block_rows=6)
    for a, b in zip(dense.add_candidates, blockwise.add_candidates):
        assert a.tolist() == b.tolist()
    for a, b in zip(dense.delete_candidates, blockwise.delete_candidates):
        assert a.tolist() == b.tolist()


# ------------------------------------------------------------------
# Persistence
# ------------------------------------------------------------------

def test_table_save_load(tmp_path, split_graph):
    table = compute_entropy(split_graph, lam=2.0)
    save_table(table, tmp_path / "table.bin")
    loaded = load_table(tmp_path / "table.bin")
    assert loaded.lam == 2.0
    assert np.array_equal(loaded.combined, table.combined)
    assert np.array_equal(loaded.structural, table.structural)


def test_table_bad_magic(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOPE" + bytes(40))
    with pytest.raises(EntropyTableFormatError, match="magic"):
        load_table(path)


def test_table_truncated_payload(tmp_path, path_graph):
    save_table(compute_entropy(path_graph), tmp_path / "t.bin")
    payload = (tmp_path / "t.bin").read_bytes()
    (tmp_path / "t.bin").write_bytes(payload[:-8])
    with pytest.raises(EntropyTableFormatError):
        load_table(tmp_path / "t.bin")


def test_export_matrix_csv(tmp_path, path_graph):
    table = compute_entropy(path_graph)
    export_matrix_csv(table, "combined", tmp_path / "h.csv")
    loaded = np.loadtxt(tmp_path / "h.csv", delimiter=",")
    assert np.array_equal(loaded, table.combined)
