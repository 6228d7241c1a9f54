"""
Sparse aggregation operators for the two backbones.

GCN uses the symmetric-normalised D~^-1/2 (A + I) D~^-1/2; GraphSAGE-mean
uses the row-normalised neighbour mean without a self loop (self features
enter through concatenation in the model).
"""

import numpy as np
import scipy.sparse as sp

from ..graph.models import Graph

GCN = "gcn"
SAGE = "sage-mean"
BACKBONES = (GCN, SAGE)


def normalized_adjacency(graph: Graph, backbone: str = GCN) -> sp.csr_matrix:
    n = graph.num_nodes
    if backbone == GCN:
        a_tilde = graph.adjacency + sp.eye(n, format="csr")
        inv_sqrt = 1.0 / np.sqrt(np.asarray(a_tilde.sum(axis=1)).ravel())
        scale = sp.diags(inv_sqrt)
        return (scale @ a_tilde @ scale).tocsr()
    if backbone == SAGE:
        degrees = np.asarray(graph.adjacency.sum(axis=1)).ravel()
        inv = np.zeros(n, dtype=np.float64)
        inv[degrees > 0] = 1.0 / degrees[degrees > 0]
        return (sp.diags(inv) @ graph.adjacency).tocsr()
    raise ValueError(f"unknown backbone '{backbone}', expected one of {BACKBONES}")
