"""
Tests for the message-passing classifier, its gradients, Adam and training.
"""
import sys
import os

import numpy as np
import pytest
from scipy.special import softmax
from scipy.stats import rankdata

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from conftest import make_random_graph
from src.gnn import (AdamState, CheckpointFormatError, GcnModel, GnnError, GnnSession, TrainConfig,
                     adam_step, evaluate, forward, init_model, load_model, loss_and_grad, macro_auc,
                     masked_accuracy, masked_cross_entropy, normalized_adjacency, save_model,
                     train_epochs)
from src.graph import Graph, SplitMask, stratified_split
from src.oracles import oracle_grad


def _model(backbone, d, h, c, seed=0, dropout=0.0):
    return init_model(backbone, d, h, c, dropout, np.random.default_rng(seed))


# ------------------------------------------------------------------
# Operators
# ------------------------------------------------------------------

def test_gcn_operator_isolated_node():
    graph = Graph.build(np.zeros((1, 1)), [0], [])
    assert normalized_adjacency(graph).toarray().tolist() == [[1.0]]


def test_gcn_operator_single_edge():
    graph = Graph.build(np.zeros((2, 1)), [0, 1], [(0, 1)])
    assert np.allclose(normalized_adjacency(graph).toarray(), 0.5)


def test_gcn_operator_matches_dense(path_graph):
    a = path_graph.adjacency.toarray() + np.eye(3)
    d = np.diag(1.0 / np.sqrt(a.sum(axis=1)))
    assert np.allclose(normalized_adjacency(path_graph).toarray(), d @ a @ d)


def test_sage_operator_is_neighbour_mean(path_graph):
    op = normalized_adjacency(path_graph, "sage-mean").toarray()
    assert np.allclose(op, [[0, 1, 0], [0.5, 0, 0.5], [0, 1, 0]])


def test_unknown_backbone():
    with pytest.raises(GnnError):
        GcnModel("gat", np.zeros((2, 2)), np.zeros((2, 2)))


# ------------------------------------------------------------------
# Forward
# ------------------------------------------------------------------

def test_forward_identity_without_edges():
    x = np.array([[1.0, 2.0], [0.5, 0.0], [3.0, 1.0]])
    graph = Graph.build(x, [0, 1, 0], [])
    model = GcnModel("gcn", np.eye(2), np.eye(2), dropout_rate=0.0)
    logits, _ = forward(model, normalized_adjacency(graph), x, training=False)
    assert np.allclose(logits, x)


def test_forward_matches_hand_computation(path_graph):
    w1 = np.array([[0.5, -0.2], [0.1, 0.3], [-0.4, 0.2]])
    w2 = np.array([[1.0, -1.0], [0.5, 0.25]])
    model = GcnModel("gcn", w1, w2, dropout_rate=0.0)
    op = normalized_adjacency(path_graph).toarray()
    expected = op @ np.maximum(op @ path_graph.features @ w1, 0.0) @ w2
    logits, _ = forward(model, normalized_adjacency(path_graph), path_graph.features, training=False)
    assert np.allclose(logits, expected)


def test_forward_training_is_seeded(split_graph):
    model = _model("gcn", split_graph.num_features, 8, 2, dropout=0.5)
    op = normalized_adjacency(split_graph)
    a, _ = forward(model, op, split_graph.features, True, np.random.default_rng(3))
    b, _ = forward(model, op, split_graph.features, True, np.random.default_rng(3))
    assert np.array_equal(a, b)


def test_dropout_expectation():
    rng = np.random.default_rng(0)
    graph = make_random_graph(1, n=5, p=0.5, d=3)
    x = np.abs(graph.features) + 0.1
    model = GcnModel("gcn", np.abs(rng.standard_normal((3, 8))), np.abs(rng.standard_normal((8, 2))),
                     dropout_rate=0.2)
    op = normalized_adjacency(graph)
    reference, _ = forward(model, op, x, training=False)
    stream = np.random.default_rng(1)
    total = np.zeros_like(reference)
    for _ in range(10_000):
        logits, _ = forward(model, op, x, True, stream)
        total += logits
    mean = total / 10_000
    assert np.linalg.norm(mean - reference) / np.linalg.norm(reference) < 0.02


@pytest.mark.parametrize("backbone", ["gcn", "sage-mean"])
def test_permutation_equivariance(backbone):
    graph = make_random_graph(4, n=7, p=0.4, d=3)
    model = _model(backbone, 3, 5, 2, seed=2)
    perm = np.random.default_rng(9).permutation(7)
    base, _ = forward(model, normalized_adjacency(graph, backbone), graph.features, training=False)
    permuted = graph.permuted(perm)
    moved, _ = forward(model, normalized_adjacency(permuted, backbone), permuted.features, training=False)
    assert np.allclose(moved, base[perm])


# ------------------------------------------------------------------
# Loss and gradients
# ------------------------------------------------------------------

def test_uniform_logits_loss_is_log_classes(path_graph):
    model = GcnModel("gcn", np.ones((3, 2)), np.zeros((2, 4)), dropout_rate=0.0)
    logits, cache = forward(model, normalized_adjacency(path_graph), path_graph.features, training=False)
    loss, _ = loss_and_grad(model, cache, logits, np.array([0, 1, 2]), np.ones(3, dtype=bool))
    assert loss == pytest.approx(np.log(4.0))


def test_peaked_logits_loss_vanishes():
    logits = np.array([[50.0, 0.0], [0.0, 50.0]])
    assert masked_cross_entropy(logits, np.array([0, 1]), np.ones(2, dtype=bool)) < 1e-20


def test_empty_mask_rejected(path_graph):
    model = _model("gcn", 3, 2, 2)
    logits, cache = forward(model, normalized_adjacency(path_graph), path_graph.features, training=False)
    with pytest.raises(GnnError):
        loss_and_grad(model, cache, logits, path_graph.labels, np.zeros(3, dtype=bool))


def test_single_node_closed_form_gradient():
    x = np.array([[0.7, 1.3]])
    graph = Graph.build(x, [1], [])
    model = GcnModel("gcn", np.array([[0.4, 0.9], [0.2, 0.1]]), np.array([[0.3, -0.6], [0.8, 0.5]]),
                     dropout_rate=0.0)
    logits, cache = forward(model, normalized_adjacency(graph), x, training=False)
    _, grads = loss_and_grad(model, cache, logits, np.array([1]), np.ones(1, dtype=bool))
    hidden = np.maximum(x @ model.layer1_weights, 0.0)
    delta = softmax(hidden @ model.layer2_weights, axis=1) - np.array([[0.0, 1.0]])
    assert np.allclose(grads[1], hidden.T @ delta, atol=1e-8, rtol=0)
    assert np.allclose(grads[0], x.T @ ((delta @ model.layer2_weights.T) * (hidden > 0)), atol=1e-8, rtol=0)


def test_zero_features_give_zero_layer1_gradient(path_graph):
    model = _model("gcn", 3, 4, 2, seed=1)
    x = np.zeros((3, 3))
    logits, cache = forward(model, normalized_adjacency(path_graph), x, training=False)
    _, grads = loss_and_grad(model, cache, logits, path_graph.labels, np.ones(3, dtype=bool))
    assert not grads[0].any()


@pytest.mark.parametrize("backbone", ["gcn", "sage-mean"])
def test_gradients_match_finite_differences(backbone):
    report = None
    for seed in range(20):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 7))
        d = int(rng.integers(1, 5))
        classes = int(rng.integers(2, 4))
        graph = make_random_graph(seed, n=n, p=0.5, d=d, classes=classes)
        model = _model(backbone, d, 3, classes, seed=seed)
        mask = rng.random(n) < 0.7
        mask[0] = True
        result = oracle_grad(model, graph, graph.features, graph.labels, mask, step=1e-6,
                             weight_decay=5e-5, seed=seed)
        report = result if report is None else report.merge(result)
    assert report.instance_count == 20
    assert report.failing_seed is None
    assert report.max_rel_error <= 1e-4


# ------------------------------------------------------------------
# Adam
# ------------------------------------------------------------------

def test_adam_zero_gradient_keeps_weights():
    model = _model("gcn", 3, 2, 2)
    state = AdamState.fresh(model.weights(), learning_rate=0.05)
    updated, state = adam_step(model, [np.zeros_like(w) for w in model.weights()], state)
    assert np.array_equal(updated.layer1_weights, model.layer1_weights)
    assert state.step == 1


def test_adam_first_step_closed_form():
    model = GcnModel("gcn", np.array([[1.0]]), np.array([[2.0]]), dropout_rate=0.0)
    state = AdamState.fresh(model.weights(), learning_rate=0.1)
    grads = [np.array([[0.5]]), np.array([[-3.0]])]
    updated, _ = adam_step(model, grads, state)
    assert updated.layer1_weights[0, 0] == pytest.approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8))
    assert updated.layer2_weights[0, 0] == pytest.approx(2.0 + 0.1 * 3.0 / (3.0 + 1e-8))


# ------------------------------------------------------------------
# Evaluation and training
# ------------------------------------------------------------------

def test_accuracy_rules():
    labels = np.array([0, 1, 0, 1])
    mask = np.ones(4, dtype=bool)
    assert masked_accuracy(np.eye(2)[labels], labels, mask) == 1.0
    assert masked_accuracy(np.zeros((4, 2)), labels, mask) == 0.5


def test_macro_auc():
    labels = np.array([0, 0, 1, 1])
    mask = np.ones(4, dtype=bool)
    good = np.array([[2.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 2.0]])
    assert macro_auc(good, labels, mask) == pytest.approx(1.0)
    assert macro_auc(-good, labels, mask) == pytest.approx(0.0)
    assert np.isnan(macro_auc(good, np.zeros(4, dtype=int), mask))


def _rank_sum_auc(scores, positive):
    ranks = rankdata(scores)
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    return (ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def test_macro_auc_matches_rank_sum_statistic():
    rng = np.random.default_rng(5)
    logits = np.round(rng.standard_normal((30, 3)), 1)
    labels = rng.integers(0, 3, 30)
    mask = rng.random(30) < 0.7
    idx = np.flatnonzero(mask)
    probs = softmax(logits[idx], axis=1)
    expected = [_rank_sum_auc(probs[:, c], labels[idx] == c) for c in range(3)
                if 0 < (labels[idx] == c).sum() < idx.size]
    assert macro_auc(logits, labels, mask) == pytest.approx(np.mean(expected), abs=1e-12)


def test_macro_auc_skips_class_covering_every_node():
    logits = np.array([[0.1, 0.9, 0.0], [0.4, 0.2, 0.0], [0.3, 0.3, 0.0]])
    labels = np.array([1, 1, 1])
    assert np.isnan(macro_auc(logits, labels, np.ones(3, dtype=bool)))
    labels = np.array([0, 1, 1])
    only_present = macro_auc(logits, labels, np.ones(3, dtype=bool))
    probs = softmax(logits, axis=1)
    expected = np.mean([_rank_sum_auc(probs[:, c], labels == c) for c in (0, 1)])
    assert only_present == pytest.approx(expected)


def test_evaluate_is_pure(split_graph):
    model = _model("gcn", split_graph.num_features, 8, 2, dropout=0.5)
    before = [w.copy() for w in model.weights()]
    metrics = evaluate(model, normalized_adjacency(split_graph), split_graph.features, split_graph.labels,
                       np.ones(split_graph.num_nodes, dtype=bool))
    assert 0.0 <= metrics.accuracy <= 1.0
    assert all(np.array_equal(a, b) for a, b in zip(before, model.weights()))


def test_patience_zero_runs_one_epoch(split_graph):
    masks = stratified_split(split_graph, seed=0)
    model = _model("gcn", split_graph.num_features, 8, 2)
    state = AdamState.fresh(model.weights(), 0.05)
    _, _, history = train_epochs(model, split_graph, masks, TrainConfig(epochs=30, patience=0),
                                 state, np.random.default_rng(0))
    assert history.epochs_run == 1


def test_training_is_deterministic(split_graph):
    masks = stratified_split(split_graph, seed=1)
    runs = []
    for _ in range(2):
        session = GnnSession(split_graph, hidden_dim=8, seed=4)
        runs.append([(m.accuracy, m.loss) for m in session.train(masks, TrainConfig(epochs=15, patience=5)).train])
    assert runs[0] == runs[1]


def test_toy_graph_becomes_separable(toy_graph):
    session = GnnSession(toy_graph, hidden_dim=8, dropout=0.0, learning_rate=0.05, seed=0)
    everyone = np.ones(4, dtype=bool)
    accuracies = []
    for _ in range(50):
        session.fit_epoch(everyone)
        accuracies.append(session.evaluate(everyone).accuracy)
    assert max(accuracies) == 1.0


def test_session_restore_returns_to_snapshot(split_graph):
    masks = stratified_split(split_graph, seed=2)
    session = GnnSession(split_graph, hidden_dim=8, seed=1)
    saved = session.snapshot()
    before = session.evaluate(masks.validation)
    history = session.train(masks, TrainConfig(epochs=10, patience=3))
    assert 1 <= history.best_epoch <= history.epochs_run <= 10
    assert len(history.validation) == history.epochs_run
    assert session.snapshot() is not saved
    session.restore(saved)
    after = session.evaluate(masks.validation)
    assert (after.accuracy, after.loss) == (before.accuracy, before.loss)


def test_session_with_graph_keeps_weights(split_graph):
    session = GnnSession(split_graph, hidden_dim=4, seed=0)
    weights = session.snapshot()
    session.with_graph(split_graph.with_edges([(0, 1)]))
    assert session.snapshot() is weights
    assert session.operator.nnz == split_graph.num_nodes + 2


# ------------------------------------------------------------------
# Checkpoints
# ------------------------------------------------------------------

@pytest.mark.parametrize("backbone", ["gcn", "sage-mean"])
def test_checkpoint_round_trip(tmp_path, backbone):
    model = _model(backbone, 5, 4, 3, dropout=0.3)
    save_model(model, tmp_path / "m.rmdl")
    loaded = load_model(tmp_path / "m.rmdl")
    assert loaded.backbone == backbone
    assert loaded.dropout_rate == 0.3
    assert np.array_equal(loaded.layer1_weights, model.layer1_weights)
    assert np.array_equal(loaded.layer2_weights, model.layer2_weights)


def test_checkpoint_bad_magic(tmp_path):
    (tmp_path / "m.rmdl").write_bytes(b"XXXX" + bytes(60))
    with pytest.raises(CheckpointFormatError):
        load_model(tmp_path / "m.rmdl")


def test_split_mask_disjointness():
    with pytest.raises(Exception):
        SplitMask(train=[True, False], validation=[True, False], test=[False, True], seed=0)
