"""
Graph analytics for EntroWire.

Edge homophily and the seeded per-class 60/20/20 node split.  Both are pure
functions of their inputs.
"""

import logging
import math
from typing import Dict, Tuple

import numpy as np

from .models import Graph, GraphError, SplitMask

logger = logging.getLogger(__name__)

DEFAULT_FRACTIONS: Tuple[float, float, float] = (0.6, 0.2, 0.2)
MIN_CLASS_SIZE = 5


class SplitError(GraphError):
    """Custom exception for split construction errors."""
    pass


def homophily_ratio(graph: Graph) -> float:
    """Fraction of unordered edges whose endpoints share a label."""
    if graph.num_edges == 0:
        raise GraphError("homophily ratio is undefined for an empty edge set")
    u, v = graph.edges[:, 0], graph.edges[:, 1]
    same = graph.labels[u] == graph.labels[v]
    return float(same.sum()) / graph.num_edges


def class_counts(graph: Graph) -> Dict[int, int]:
    values, counts = np.unique(graph.labels, return_counts=True)
    return {int(c): int(n) for c, n in zip(values, counts)}


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def partition_sizes(n: int, fractions: Tuple[float, float, float] = DEFAULT_FRACTIONS) -> Tuple[int, int, int]:
    """
    Per-class partition sizes under the rounding rule.

    train = round_half_up(f_train * n), validation = round_half_up(f_val * n),
    test = the remainder.  Each size is within one node of its exact share
    whenever n >= 5.
    """
    n_train = _round_half_up(fractions[0] * n)
    n_val = _round_half_up(fractions[1] * n)
    n_train = min(n_train, n)
    n_val = min(n_val, n - n_train)
    return n_train, n_val, n - n_train - n_val


def stratified_split(graph: Graph, seed: int,
                     fractions: Tuple[float, float, float] = DEFAULT_FRACTIONS,
                     small_class_policy: str = "error") -> SplitMask:
    """
    Seeded per-class shuffle followed by proportional assignment.

    Args:
        graph: the graph whose labels drive stratification
        seed: integer seed for the shuffle; equal seeds give equal masks
        fractions: train / validation / test shares, summing to 1
        small_class_policy: "error" raises SplitError for a class with fewer
            than five members; "train" folds such a class into the training
            partition instead

    Returns:
        SplitMask with pairwise-disjoint masks
    """
    if abs(sum(fractions) - 1.0) > 1e-9 or min(fractions) < 0:
        raise SplitError(f"fractions must be non-negative and sum to 1, got {fractions}")

    rng = np.random.default_rng(seed)
    n = graph.num_nodes
    train = np.zeros(n, dtype=bool)
    val = np.zeros(n, dtype=bool)
    test = np.zeros(n, dtype=bool)

    for cls in sorted(class_counts(graph)):
        members = rng.permutation(np.flatnonzero(graph.labels == cls))
        if members.shape[0] < MIN_CLASS_SIZE:
            if small_class_policy == "train":
                logger.warning(f"Class {cls} has {members.shape[0]} nodes; assigned to training only")
                train[members] = True
                continue
            raise SplitError(
                f"Class {cls} has {members.shape[0]} nodes, too small for a non-empty test partition "
                f"(need at least {MIN_CLASS_SIZE})")

        n_train, n_val, n_test = partition_sizes(members.shape[0], fractions)
        if n_test < 1:
            raise SplitError(f"Class {cls} produces an empty test partition")
        train[members[:n_train]] = True
        val[members[n_train:n_train + n_val]] = True
        test[members[n_train + n_val:]] = True

    split = SplitMask(train=train, validation=val, test=test, seed=seed)
    logger.debug(f"Split seed={seed}: train/val/test = {split.counts()}")
    return split
