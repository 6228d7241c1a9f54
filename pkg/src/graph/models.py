"""
Graph models for EntroWire.
Defines the immutable node-attributed graph and the per-class split masks.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp


logger = logging.getLogger(__name__)


class GraphError(ValueError):
    """Custom exception for graph construction and analytics errors."""
    pass


def _frozen(array: np.ndarray) -> np.ndarray:
    """Return a read-only view, copying only when the input is still writeable."""
    if array.flags.writeable:
        array = array.copy()
        array.setflags(write=False)
    return array


def canonical_pairs(pairs: Any, num_nodes: int) -> Tuple[np.ndarray, int]:
    """
    Normalise an arbitrary pair list into the stored edge representation.

    Args:
        pairs: iterable of (u, v) node indices, any orientation
        num_nodes: N, used for range checks

    Returns:
        (edges, self_loops): an (E, 2) int64 array with u < v, unique and
        sorted lexicographically, plus the number of self-loop pairs dropped
    """
    arr = np.asarray(pairs, dtype=np.int64)
    if arr.size == 0:
        return np.zeros((0, 2), dtype=np.int64), 0
    arr = arr.reshape(-1, 2)
    if arr.min() < 0 or arr.max() >= num_nodes:
        raise GraphError(f"Edge endpoint outside 0..{num_nodes - 1}")

    loops = arr[:, 0] == arr[:, 1]
    self_loops = int(loops.sum())
    arr = arr[~loops]
    if arr.shape[0] == 0:
        return np.zeros((0, 2), dtype=np.int64), self_loops

    lo = np.minimum(arr[:, 0], arr[:, 1])
    hi = np.maximum(arr[:, 0], arr[:, 1])
    edges = np.unique(np.stack([lo, hi], axis=1), axis=0)
    return edges, self_loops


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected node-attributed graph with CSR adjacency.

    Build instances through ``Graph.build`` so that the edge set is
    canonical (no self-loops, no duplicates, u < v) and the adjacency is
    symmetric.
    """
    features: np.ndarray
    labels: np.ndarray
    edges: np.ndarray
    adjacency: sp.csr_matrix
    node_ids: Tuple[str, ...] = ()
    class_names: Tuple[str, ...] = ()
    metadata: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def build(cls, features: Any, labels: Any, pairs: Any,
              node_ids: Optional[Sequence[str]] = None,
              class_names: Optional[Sequence[str]] = None,
              metadata: Optional[Dict[str, Any]] = None) -> "Graph":
        feats = np.asarray(features, dtype=np.float64)
        if feats.ndim != 2:
            raise GraphError(f"features must be an N x d matrix, got shape {feats.shape}")
        labs = np.asarray(labels, dtype=np.int64)
        if labs.ndim != 1 or labs.shape[0] != feats.shape[0]:
            raise GraphError(
                f"labels must be a length-{feats.shape[0]} vector, got shape {labs.shape}")
        if labs.size and labs.min() < 0:
            raise GraphError("class ids must be non-negative")
        if class_names and labs.size and labs.max() >= len(class_names):
            raise GraphError("class id outside the declared class names")

        n = feats.shape[0]
        edges, self_loops = canonical_pairs(pairs, n)

        rows = np.concatenate([edges[:, 0], edges[:, 1]])
        cols = np.concatenate([edges[:, 1], edges[:, 0]])
        adjacency = sp.csr_matrix(
            (np.ones(rows.shape[0], dtype=np.float64), (rows, cols)), shape=(n, n))
        adjacency.sort_indices()

        meta = dict(metadata or {})
        meta.setdefault("self_loops_dropped", self_loops)

        return cls(
            features=_frozen(feats),
            labels=_frozen(labs),
            edges=_frozen(edges),
            adjacency=adjacency,
            node_ids=tuple(node_ids) if node_ids is not None else (),
            class_names=tuple(class_names) if class_names is not None else (),
            metadata=meta,
        )

    @property
    def num_nodes(self) -> int:
        return int(self.features.shape[0])

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def num_features(self) -> int:
        return int(self.features.shape[1])

    @property
    def num_classes(self) -> int:
        observed = int(self.labels.max()) + 1 if self.labels.size else 0
        return max(len(self.class_names), observed)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr).astype(np.int64)

    def neighbors(self, v: int) -> np.ndarray:
        """One-hop neighbours of ``v`` in ascending id order."""
        start, end = self.adjacency.indptr[v], self.adjacency.indptr[v + 1]
        return self.adjacency.indices[start:end]

    def edge_keys(self) -> np.ndarray:
        """Scalar key u * N + v per stored edge, ascending."""
        return self.edges[:, 0] * self.num_nodes + self.edges[:, 1]

    def with_edges(self, pairs: Iterable) -> "Graph":
        """Same nodes, features and labels over a different edge set."""
        return Graph.build(self.features, self.labels, pairs,
                           node_ids=self.node_ids or None,
                           class_names=self.class_names or None,
                           metadata={"derived_from": self.metadata.get("source", "")})

    def permuted(self, perm: Sequence[int]) -> "Graph":
        """Relabel nodes so that old node ``perm[i]`` becomes node ``i``."""
        perm = np.asarray(perm, dtype=np.int64)
        inverse = np.empty_like(perm)
        inverse[perm] = np.arange(perm.shape[0])
        return Graph.build(self.features[perm], self.labels[perm], inverse[self.edges],
                           class_names=self.class_names or None)


@dataclass(frozen=True, eq=False)
class SplitMask:
    """Disjoint train / validation / test node masks produced from one seed."""
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray
    seed: int

    def __post_init__(self):
        for name in ("train", "validation", "test"):
            object.__setattr__(self, name, _frozen(np.asarray(getattr(self, name), dtype=bool)))
        overlap = (self.train & self.validation) | (self.train & self.test) | (self.validation & self.test)
        if overlap.any():
            raise GraphError("split masks must be pairwise disjoint")

    def counts(self) -> Tuple[int, int, int]:
        return int(self.train.sum()), int(self.validation.sum()), int(self.test.sum())
