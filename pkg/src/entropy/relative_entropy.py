"""
Node relative entropy for EntroWire.

Feature entropy is -P log P of a softmax over all ordered node-pair dot
products; structural entropy is one minus the base-2 Jensen-Shannon
divergence between two nodes' ego degree profiles; the relative entropy
mixes them as H = H_f + lambda * H_s.  Everything here runs once per graph,
before any training.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import logsumexp, rel_entr

from ..graph.models import Graph
from .embedding import EmbeddingConfig, EntropyError, embed

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)
NORMALIZATION_TOLERANCE = 1e-9
# elements per (rows x N x profile length) work block
_BLOCK_BUDGET = 20_000_000


# ---------------------------------------------------------------------------
# Feature entropy
# ---------------------------------------------------------------------------

def _symmetric_gram(embeddings: np.ndarray) -> np.ndarray:
    gram = embeddings @ embeddings.T
    return np.triu(gram) + np.triu(gram, 1).T


def feature_entropy(embeddings: np.ndarray, include_self_pairs: bool = True) -> np.ndarray:
    """
    Pairwise feature entropy H_f(v, u) = -P log P.

    P(z_v, z_u) = exp<z_v, z_u> / sum_{i,j} exp<z_i, z_j>, normalised with
    log-sum-exp.  ``include_self_pairs`` decides whether the i == j terms
    belong to the normaliser.

    Args:
        embeddings: N x h matrix, N >= 2, finite entries

    Returns:
        Symmetric N x N matrix
    """
    z = np.asarray(embeddings, dtype=np.float64)
    if z.ndim != 2 or z.shape[0] < 2:
        raise EntropyError(f"feature entropy needs an N x h matrix with N >= 2, got {z.shape}")
    if not np.isfinite(z).all():
        raise EntropyError("embeddings contain non-finite entries")

    gram = _symmetric_gram(z)
    if include_self_pairs:
        log_norm = logsumexp(gram)
    else:
        log_norm = logsumexp(gram[~np.eye(gram.shape[0], dtype=bool)])

    log_p = gram - log_norm
    p = np.exp(log_p)
    total = p.sum() if include_self_pairs else p.sum() - np.trace(p)
    if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
        raise EntropyError(f"pair probabilities sum to {total!r}, expected 1")
    return -p * log_p


# ---------------------------------------------------------------------------
# Structural entropy
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DegreeProfile:
    """Descending ego-plus-neighbour degree sequence and its normalisation."""
    sequence: np.ndarray
    distribution: np.ndarray

    @property
    def max_degree(self) -> int:
        return int(self.sequence.shape[0]) - 1


def degree_sequences(graph: Graph) -> np.ndarray:
    """N x (M+1) matrix of descending, zero-padded ego-plus-neighbour degrees."""
    degrees = graph.degrees
    n = graph.num_nodes
    width = (int(degrees.max()) if n else 0) + 1
    out = np.zeros((n, width), dtype=np.int64)
    for v in range(n):
        values = np.concatenate(([degrees[v]], degrees[graph.neighbors(v)]))
        values = np.sort(values)[::-1]
        out[v, :values.shape[0]] = values
    return out


def profile_distributions(graph: Graph) -> np.ndarray:
    """Row-normalised degree sequences; isolated nodes get the point mass at index 0."""
    sequences = degree_sequences(graph).astype(np.float64)
    totals = sequences.sum(axis=1)
    dist = np.zeros_like(sequences)
    nonzero = totals > 0
    dist[nonzero] = sequences[nonzero] / totals[nonzero, None]
    dist[~nonzero, 0] = 1.0
    return dist


def degree_profile(graph: Graph, v: int) -> DegreeProfile:
    if not 0 <= v < graph.num_nodes:
        raise EntropyError(f"node id {v} outside 0..{graph.num_nodes - 1}")
    sequence = degree_sequences(graph)[v]
    total = sequence.sum()
    if total > 0:
        distribution = sequence / total
    else:
        distribution = np.zeros(sequence.shape[0], dtype=np.float64)
        distribution[0] = 1.0
    return DegreeProfile(sequence=sequence, distribution=distribution)


def structural_rows(profiles: np.ndarray, start: int, end: int) -> np.ndarray:
    """H_s for rows start..end-1 against every node (one work block)."""
    rows = profiles[start:end, None, :]
    cols = profiles[None, :, :]
    mid = 0.5 * (rows + cols)
    kl_rows = rel_entr(rows, mid).sum(axis=-1)
    kl_cols = rel_entr(cols, mid).sum(axis=-1)
    return 1.0 - 0.5 * (kl_rows + kl_cols) / LN2


def row_blocks(n: int, width: int, block_rows: Optional[int] = None) -> List[Tuple[int, int]]:
    if block_rows is None:
        block_rows = max(1, _BLOCK_BUDGET // max(1, n * width))
    return [(s, min(s + block_rows, n)) for s in range(0, n, block_rows)]


def structural_entropy(graph: Graph, workers: int = 1, block_rows: Optional[int] = None) -> np.ndarray:
    """
    Pairwise structural entropy H_s(v, u) = 1 - JS_2(p(v) || p(u)).

    Rows are computed in independent blocks, optionally across ``workers``
    threads; each block depends only on the profile matrix, so the result
    is identical to a sequential pass.
    """
    profiles = profile_distributions(graph)
    n, width = profiles.shape
    blocks = row_blocks(n, width, block_rows)

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: structural_rows(profiles, *b), blocks))
    else:
        parts = [structural_rows(profiles, s, e) for s, e in blocks]

    h = np.vstack(parts) if parts else np.zeros((0, 0))
    h = np.triu(h) + np.triu(h, 1).T
    return np.clip(h, 0.0, 1.0)


# ---------------------------------------------------------------------------
# Relative entropy
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EntropyTable:
    """Feature, structural and combined pairwise entropy with the mixing weight."""
    feature: np.ndarray
    structural: np.ndarray
    combined: np.ndarray
    lam: float

    def __post_init__(self):
        shape = self.feature.shape
        if len(shape) != 2 or shape[0] != shape[1]:
            raise EntropyError(f"entropy matrices must be square, got {shape}")
        if self.structural.shape != shape or self.combined.shape != shape:
            raise EntropyError("feature, structural and combined matrices differ in shape")
        if self.lam < 0:
            raise EntropyError("lambda must be >= 0")

    @property
    def num_nodes(self) -> int:
        return int(self.feature.shape[0])


def relative_entropy(feature: np.ndarray, structural: np.ndarray, lam: float) -> EntropyTable:
    """Combine the two pairwise matrices as feature + lam * structural."""
    feature = np.asarray(feature, dtype=np.float64)
    structural = np.asarray(structural, dtype=np.float64)
    if feature.shape != structural.shape:
        raise EntropyError(f"shape mismatch: {feature.shape} vs {structural.shape}")
    if lam < 0:
        raise EntropyError("lambda must be >= 0")
    return EntropyTable(feature=feature, structural=structural,
                        combined=feature + lam * structural, lam=float(lam))


def compute_entropy(graph: Graph, lam: float = 1.0, embedding: Optional[EmbeddingConfig] = None,
                    workers: int = 1, include_self_pairs: bool = True) -> EntropyTable:
    """Run the whole dense pipeline: embed, feature entropy, structural entropy, mix."""
    started = time.time()
    embedding = embedding or EmbeddingConfig.auto(graph.num_features)
    z = embed(graph.features, embedding)
    h_f = feature_entropy(z, include_self_pairs=include_self_pairs)
    h_s = structural_entropy(graph, workers=workers)
    table = relative_entropy(h_f, h_s, lam)
    logger.info(f"Relative entropy computed for N={graph.num_nodes} (lambda={lam}, "
                f"embedding={embedding.mode}/{embedding.target_dim}) in {time.time() - started:.2f}s")
    return table
