"""
Truncated entropy sequences for graphs too large for a dense N x N table.

The softmax normaliser is accumulated block by block, then every row of the
combined entropy is formed in turn and only its top-c remote candidates are
kept.  Delete rankings only need the neighbour columns and are kept whole.
"""

import logging
import time
from typing import List

import numpy as np
from scipy.special import logsumexp

from ..graph.models import Graph
from .embedding import EntropyError
from .relative_entropy import profile_distributions, row_blocks, structural_rows
from .sequences import EntropySequence, rank_ascending, rank_descending

logger = logging.getLogger(__name__)

DEFAULT_BLOCK_ROWS = 512


def _log_normaliser(z: np.ndarray, block_rows: int) -> float:
    partials = [logsumexp(z[s:e] @ z.T) for s, e in row_blocks(z.shape[0], 1, block_rows)]
    return float(logsumexp(np.array(partials)))


def _top_remote(row: np.ndarray, remote: np.ndarray, top_c: int) -> np.ndarray:
    candidates = np.flatnonzero(remote)
    scores = row[candidates]
    if candidates.shape[0] > top_c:
        # keep everything tied with the c-th best so the id tie-break stays exact
        threshold = np.partition(scores, candidates.shape[0] - top_c)[candidates.shape[0] - top_c]
        keep = scores >= threshold
        candidates, scores = candidates[keep], scores[keep]
    return rank_descending(candidates, scores)[:top_c]


def blockwise_sequences(graph: Graph, embeddings: np.ndarray, lam: float, top_c: int,
                        block_rows: int = DEFAULT_BLOCK_ROWS) -> EntropySequence:
    """
    Entropy sequences without materialising the N x N matrices.

    Args:
        graph: the original graph
        embeddings: N x h fixed embedding of the node features
        lam: structural entropy weight
        top_c: number of add candidates kept per node
        block_rows: rows processed per block

    Returns:
        EntropySequence whose add lists hold at most ``top_c`` entries
    """
    z = np.asarray(embeddings, dtype=np.float64)
    n = graph.num_nodes
    if z.shape[0] != n:
        raise EntropyError(f"embedding has {z.shape[0]} rows, graph has {n} nodes")
    if not np.isfinite(z).all():
        raise EntropyError("embeddings contain non-finite entries")
    if lam < 0:
        raise EntropyError("lambda must be >= 0")

    started = time.time()
    log_norm = _log_normaliser(z, block_rows)
    profiles = profile_distributions(graph)

    add: List[np.ndarray] = []
    delete: List[np.ndarray] = []
    for start, end in row_blocks(n, 1, block_rows):
        log_p = z[start:end] @ z.T - log_norm
        h_s = np.clip(structural_rows(profiles, start, end), 0.0, 1.0)
        h_block = -np.exp(log_p) * log_p + lam * h_s
        for offset, v in enumerate(range(start, end)):
            neighbours = graph.neighbors(v).astype(np.int64)
            remote = np.ones(n, dtype=bool)
            remote[neighbours] = False
            remote[v] = False
            row = h_block[offset]
            add.append(_top_remote(row, remote, top_c))
            delete.append(rank_ascending(neighbours, row[neighbours]))

    logger.info(f"Blockwise entropy sequences for N={n} (top_c={top_c}) in {time.time() - started:.2f}s")
    return EntropySequence(add_candidates=tuple(add), delete_candidates=tuple(delete))
