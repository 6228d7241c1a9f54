"""
Per-node entropy sequences.

For every ego node the remote (non-neighbour) candidates are ranked by
relative entropy, highest first, to choose edges to add; its one-hop
neighbours are ranked lowest first to choose edges to delete.  Ties break
by ascending node id so that rankings are fully deterministic.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..graph.models import Graph
from .embedding import EntropyError
from .relative_entropy import EntropyTable

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EntropySequence:
    """Ranked add and delete candidates, one array per node."""
    add_candidates: Tuple[np.ndarray, ...]
    delete_candidates: Tuple[np.ndarray, ...]

    @property
    def num_nodes(self) -> int:
        return len(self.add_candidates)

    def add_lengths(self) -> np.ndarray:
        return np.array([a.shape[0] for a in self.add_candidates], dtype=np.int64)

    def delete_lengths(self) -> np.ndarray:
        return np.array([d.shape[0] for d in self.delete_candidates], dtype=np.int64)

    def truncated(self, limit: int) -> "EntropySequence":
        """Keep only the first ``limit`` add candidates per node."""
        return EntropySequence(
            add_candidates=tuple(a[:limit] for a in self.add_candidates),
            delete_candidates=self.delete_candidates,
        )


def rank_descending(candidates: np.ndarray, scores: np.ndarray) -> np.ndarray:
    return candidates[np.lexsort((candidates, -scores))]


def rank_ascending(candidates: np.ndarray, scores: np.ndarray) -> np.ndarray:
    return candidates[np.lexsort((candidates, scores))]


def build_sequences(table: EntropyTable, graph: Graph, max_add: Optional[int] = None) -> EntropySequence:
    """
    Build the add/delete rankings from the combined entropy matrix.

    Args:
        table: pairwise entropy table of the same graph
        graph: the original graph (defines one-hop neighbourhoods)
        max_add: optional cap on the stored add list length per node

    Returns:
        EntropySequence
    """
    n = graph.num_nodes
    if table.num_nodes != n:
        raise EntropyError(f"entropy table has {table.num_nodes} nodes, graph has {n}")

    h = table.combined
    everyone = np.arange(n, dtype=np.int64)
    add, delete = [], []
    for v in range(n):
        neighbours = graph.neighbors(v).astype(np.int64)
        remote = np.ones(n, dtype=bool)
        remote[neighbours] = False
        remote[v] = False
        candidates = everyone[remote]

        ranked = rank_descending(candidates, h[v, candidates])
        if max_add is not None:
            ranked = ranked[:max_add]
        add.append(ranked)
        delete.append(rank_ascending(neighbours, h[v, neighbours]))

    logger.debug(f"Built entropy sequences for {n} nodes")
    return EntropySequence(add_candidates=tuple(add), delete_candidates=tuple(delete))


def shuffle_sequences(sequences: EntropySequence, rng: np.random.Generator) -> EntropySequence:
    """Randomly permute every node's add and delete lists (ranking without entropy)."""
    return EntropySequence(
        add_candidates=tuple(rng.permutation(a) for a in sequences.add_candidates),
        delete_candidates=tuple(rng.permutation(d) for d in sequences.delete_candidates),
    )
