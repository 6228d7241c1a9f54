"""
Brute-force reference implementations used by the test suite.

Everything here is written as plain loops over Python numbers so that it
shares no numerical kernel with the vectorised modules it checks.  Only
tiny inputs are supported.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from ..graph.models import Graph
from ..rl.environment import RewireState

logger = logging.getLogger(__name__)

MAX_ENTROPY_NODES = 200
MAX_GRAD_NODES = 8
MAX_SEARCH_NODES = 6
MAX_SEARCH_STATES = 3 ** 12


class OracleError(ValueError):
    """Custom exception for oracle misuse (inputs too large to enumerate)."""
    pass


@dataclass(frozen=True)
class OracleReport:
    max_abs_error: float
    max_rel_error: float
    instance_count: int
    failing_seed: Optional[int] = None

    def merge(self, other: "OracleReport") -> "OracleReport":
        return OracleReport(
            max_abs_error=max(self.max_abs_error, other.max_abs_error),
            max_rel_error=max(self.max_rel_error, other.max_rel_error),
            instance_count=self.instance_count + other.instance_count,
            failing_seed=self.failing_seed if self.failing_seed is not None else other.failing_seed,
        )


def _neighbour_sets(graph: Graph) -> List[Set[int]]:
    sets: List[Set[int]] = [set() for _ in range(graph.num_nodes)]
    for u, v in graph.edges.tolist():
        sets[u].add(v)
        sets[v].add(u)
    return sets


# ----------------------------------------------------------------------
# Entropy
# ----------------------------------------------------------------------

def oracle_entropy(graph: Graph, embeddings, lam: float,
                   include_self_pairs: bool = True) -> Dict[str, List[List[float]]]:
    """
    Feature, structural and combined entropy by direct double loops.

    Returns:
        dict with "feature", "structural" and "combined" N x N nested lists
    """
    n = graph.num_nodes
    if n > MAX_ENTROPY_NODES:
        raise OracleError(f"oracle_entropy supports N <= {MAX_ENTROPY_NODES}")
    z = [[float(x) for x in row] for row in np.asarray(embeddings).tolist()]

    dots = [[sum(a * b for a, b in zip(z[i], z[j])) for j in range(n)] for i in range(n)]
    total = 0.0
    for i in range(n):
        for j in range(n):
            if include_self_pairs or i != j:
                total += math.exp(dots[i][j])
    feature = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            p = math.exp(dots[i][j]) / total
            feature[i][j] = -p * math.log(p) if p > 0 else 0.0

    neighbours = _neighbour_sets(graph)
    degree = [len(s) for s in neighbours]
    width = max(degree) + 1 if n else 1
    profiles = []
    for v in range(n):
        values = sorted([degree[v]] + [degree[u] for u in neighbours[v]], reverse=True)
        values += [0] * (width - len(values))
        s = sum(values)
        profiles.append([x / s for x in values] if s > 0 else [1.0] + [0.0] * (width - 1))

    def kl2(p, q):
        return sum(a * math.log2(a / b) for a, b in zip(p, q) if a > 0)

    structural = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            m = [(a + b) / 2 for a, b in zip(profiles[i], profiles[j])]
            js = 0.5 * kl2(profiles[i], m) + 0.5 * kl2(profiles[j], m)
            structural[i][j] = 1.0 - js

    combined = [[feature[i][j] + lam * structural[i][j] for j in range(n)] for i in range(n)]
    return {"feature": feature, "structural": structural, "combined": combined}


def oracle_sequences(combined, graph: Graph) -> Tuple[List[List[int]], List[List[int]]]:
    """Add lists (remote nodes, highest first) and delete lists (neighbours, lowest first) by full sort."""
    n = graph.num_nodes
    h = np.asarray(combined).tolist()
    neighbours = _neighbour_sets(graph)
    add, delete = [], []
    for v in range(n):
        remote = [u for u in range(n) if u != v and u not in neighbours[v]]
        add.append(sorted(remote, key=lambda u: (-h[v][u], u)))
        delete.append(sorted(neighbours[v], key=lambda u: (h[v][u], u)))
    return add, delete


# ----------------------------------------------------------------------
# Rewiring
# ----------------------------------------------------------------------

def oracle_edit_sets(state: RewireState, sequences) -> Tuple[Set[Tuple[int, int]], Set[Tuple[int, int]]]:
    removals, additions = set(), set()
    for v in range(state.num_nodes):
        for u in list(sequences.delete_candidates[v])[:int(state.d[v])]:
            removals.add((min(v, int(u)), max(v, int(u))))
        for u in list(sequences.add_candidates[v])[:int(state.k[v])]:
            additions.add((min(v, int(u)), max(v, int(u))))
    return removals, additions


def oracle_rewire(original: Graph, state: RewireState, sequences) -> Set[Tuple[int, int]]:
    """(original edges minus removals) union additions, as a set of (u, v) with u < v."""
    removals, additions = oracle_edit_sets(state, sequences)
    edges = {(int(u), int(v)) for u, v in original.edges.tolist()}
    return (edges - removals) | additions


def _admissible_ranges(graph: Graph, sequences, k_bound: int, d_bound: int):
    degree = [len(s) for s in _neighbour_sets(graph)]
    k_ranges = [range(min(k_bound, len(sequences.add_candidates[v])) + 1) for v in range(graph.num_nodes)]
    d_ranges = [range(min(d_bound, degree[v]) + 1) for v in range(graph.num_nodes)]
    return k_ranges + d_ranges


def oracle_ranked_states(graph: Graph, sequences, evaluator: Callable[[RewireState, Graph], float],
                         k_bound: int = 2, d_bound: int = 2) -> List[Tuple[RewireState, float]]:
    """
    Score every admissible state in lexicographic order of (k_1..k_N, d_1..d_N).

    ``evaluator`` receives the state and the rewired graph and must be deterministic.
    """
    n = graph.num_nodes
    if n > MAX_SEARCH_NODES:
        raise OracleError(f"exhaustive search supports N <= {MAX_SEARCH_NODES}")
    ranges = _admissible_ranges(graph, sequences, k_bound, d_bound)
    count = 1
    for r in ranges:
        count *= len(r)
    if count > MAX_SEARCH_STATES:
        raise OracleError(f"{count} states exceed the search cap of {MAX_SEARCH_STATES}")

    scored = []
    for combo in itertools.product(*ranges):
        state = RewireState(k=np.array(combo[:n], dtype=np.int64), d=np.array(combo[n:], dtype=np.int64))
        rewired = graph.with_edges(sorted(oracle_rewire(graph, state, sequences)))
        scored.append((state, float(evaluator(state, rewired))))
    return scored


def oracle_best_state(graph: Graph, sequences, evaluator: Callable[[RewireState, Graph], float],
                      k_bound: int = 2, d_bound: int = 2) -> Tuple[RewireState, float]:
    """Argmax over every admissible state; the lexicographically first state wins ties."""
    best_state, best_score = None, -math.inf
    for state, score in oracle_ranked_states(graph, sequences, evaluator, k_bound, d_bound):
        if score > best_score:
            best_state, best_score = state, score
    return best_state, best_score


# ----------------------------------------------------------------------
# Gradients
# ----------------------------------------------------------------------

def _dense_operator(graph: Graph, backbone: str) -> np.ndarray:
    n = graph.num_nodes
    neighbours = _neighbour_sets(graph)
    op = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if backbone == "gcn":
                if i == j or j in neighbours[i]:
                    op[i, j] = 1.0 / math.sqrt((len(neighbours[i]) + 1) * (len(neighbours[j]) + 1))
            elif j in neighbours[i]:
                op[i, j] = 1.0 / len(neighbours[i])
    return op


def _dense_loss(w1: np.ndarray, w2: np.ndarray, backbone: str, op: np.ndarray, x: np.ndarray,
                labels: Sequence[int], rows: Sequence[int], weight_decay: float) -> float:
    def aggregate(h):
        return op @ h if backbone == "gcn" else np.hstack([h, op @ h])

    hidden = np.maximum(aggregate(x) @ w1, 0.0)
    logits = aggregate(hidden) @ w2
    total = 0.0
    for i in rows:
        row = logits[i].tolist()
        top = max(row)
        log_norm = top + math.log(sum(math.exp(v - top) for v in row))
        total += log_norm - row[labels[i]]
    penalty = 0.5 * weight_decay * (float((w1 ** 2).sum()) + float((w2 ** 2).sum()))
    return total / len(rows) + penalty


def oracle_grad(model, graph: Graph, features, labels, mask, step: float = 1e-6,
                weight_decay: float = 0.0, tolerance: float = 1e-4,
                seed: Optional[int] = None, rel_floor: float = 1e-4) -> OracleReport:
    """
    Central finite differences of the masked cross-entropy against the
    analytic gradients of the GNN module (dropout off).

    The relative error of an entry is |analytic - numeric| / max(|analytic|, |numeric|, rel_floor).
    """
    from ..gnn.model import forward, loss_and_grad
    from ..gnn.operators import normalized_adjacency

    n = graph.num_nodes
    if n > MAX_GRAD_NODES:
        raise OracleError(f"oracle_grad supports N <= {MAX_GRAD_NODES}")
    x = np.asarray(features, dtype=np.float64)
    labels = [int(c) for c in np.asarray(labels).tolist()]
    rows = [i for i, m in enumerate(np.asarray(mask).tolist()) if m]

    logits, cache = forward(model, normalized_adjacency(graph, model.backbone), x, training=False)
    _, analytic = loss_and_grad(model, cache, logits, np.asarray(labels), np.asarray(mask, dtype=bool),
                                weight_decay=weight_decay)

    op = _dense_operator(graph, model.backbone)
    weights = [model.layer1_weights.copy(), model.layer2_weights.copy()]
    max_abs, max_rel = 0.0, 0.0
    for index, w in enumerate(weights):
        for pos in itertools.product(*(range(s) for s in w.shape)):
            original = w[pos]
            w[pos] = original + step
            plus = _dense_loss(weights[0], weights[1], model.backbone, op, x, labels, rows, weight_decay)
            w[pos] = original - step
            minus = _dense_loss(weights[0], weights[1], model.backbone, op, x, labels, rows, weight_decay)
            w[pos] = original
            numeric = (plus - minus) / (2.0 * step)
            a = float(analytic[index][pos])
            err = abs(a - numeric)
            max_abs = max(max_abs, err)
            max_rel = max(max_rel, err / max(abs(a), abs(numeric), rel_floor))

    failing = seed if max_rel > tolerance else None
    if failing is not None:
        logger.warning(f"Gradient check failed for seed {seed}: max relative error {max_rel:.3e}")
    return OracleReport(max_abs_error=max_abs, max_rel_error=max_rel, instance_count=1, failing_seed=failing)
