"""
Two-layer message-passing classifier with hand-derived backpropagation.

Layer 1: aggregate -> linear -> ReLU -> inverted dropout (training only).
Layer 2: aggregate -> linear -> logits.
For the GraphSAGE-mean backbone each aggregate is the concatenation
[self, neighbour mean], which doubles the input width of both layers.
All arithmetic is float64.
"""

import logging
from dataclasses import dataclass, replace
from typing import ClassVar, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.special import log_softmax

from .operators import BACKBONES, GCN, SAGE

logger = logging.getLogger(__name__)


class GnnError(ValueError):
    """Custom exception for GNN engine errors."""
    pass


@dataclass(frozen=True, eq=False)
class GcnModel:
    """Weights of the two-layer classifier (no biases)."""
    backbone: str
    layer1_weights: np.ndarray
    layer2_weights: np.ndarray
    dropout_rate: float = 0.5
    num_layers: ClassVar[int] = 2

    def __post_init__(self):
        if self.backbone not in BACKBONES:
            raise GnnError(f"unknown backbone '{self.backbone}'")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise GnnError("dropout rate must be in [0, 1)")
        width = 2 if self.backbone == SAGE else 1
        hidden = self.layer1_weights.shape[1]
        if self.layer2_weights.shape[0] != width * hidden:
            raise GnnError(f"layer shapes disagree: {self.layer1_weights.shape} then "
                           f"{self.layer2_weights.shape} for backbone {self.backbone}")

    @property
    def input_dim(self) -> int:
        return self.layer1_weights.shape[0] // (2 if self.backbone == SAGE else 1)

    @property
    def hidden_dim(self) -> int:
        return self.layer1_weights.shape[1]

    @property
    def num_classes(self) -> int:
        return self.layer2_weights.shape[1]

    def weights(self) -> List[np.ndarray]:
        return [self.layer1_weights, self.layer2_weights]

    def with_weights(self, weights: List[np.ndarray]) -> "GcnModel":
        return replace(self, layer1_weights=weights[0], layer2_weights=weights[1])


@dataclass(frozen=True, eq=False)
class ForwardCache:
    """Intermediate values the backward pass needs."""
    operator: sp.spmatrix
    layer1_input: np.ndarray
    pre_activation: np.ndarray
    dropout_scale: Optional[np.ndarray]
    layer2_input: np.ndarray


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_model(backbone: str, input_dim: int, hidden_dim: int, num_classes: int,
               dropout_rate: float, rng: np.random.Generator) -> GcnModel:
    width = 2 if backbone == SAGE else 1
    return GcnModel(
        backbone=backbone,
        layer1_weights=_glorot(rng, width * input_dim, hidden_dim),
        layer2_weights=_glorot(rng, width * hidden_dim, num_classes),
        dropout_rate=dropout_rate,
    )


def _aggregate(backbone: str, operator: sp.spmatrix, h: np.ndarray) -> np.ndarray:
    if backbone == GCN:
        return np.asarray(operator @ h)
    return np.hstack([h, np.asarray(operator @ h)])


def forward(model: GcnModel, operator: sp.spmatrix, features: np.ndarray, training: bool,
            rng: Optional[np.random.Generator] = None) -> Tuple[np.ndarray, ForwardCache]:
    """
    Run both layers.

    Args:
        model: classifier weights
        operator: aggregation operator from ``normalized_adjacency``
        features: N x d input matrix
        training: apply dropout after layer 1 when True
        rng: seeded stream used for the dropout mask

    Returns:
        (logits N x C, cache for ``loss_and_grad``)
    """
    features = np.asarray(features, dtype=np.float64)
    a1 = _aggregate(model.backbone, operator, features)
    if a1.shape[1] != model.layer1_weights.shape[0]:
        raise GnnError(f"feature width {features.shape[1]} does not match model input {model.input_dim}")
    z1 = a1 @ model.layer1_weights
    h1 = np.maximum(z1, 0.0)

    scale = None
    if training and model.dropout_rate > 0.0:
        if rng is None:
            raise GnnError("training-mode forward needs a random stream for dropout")
        keep = rng.random(h1.shape) >= model.dropout_rate
        scale = keep / (1.0 - model.dropout_rate)
        h1 = h1 * scale

    a2 = _aggregate(model.backbone, operator, h1)
    logits = a2 @ model.layer2_weights
    if not np.isfinite(logits).all():
        raise GnnError("non-finite values in forward pass")
    return logits, ForwardCache(operator=operator, layer1_input=a1, pre_activation=z1,
                                dropout_scale=scale, layer2_input=a2)


def masked_cross_entropy(logits: np.ndarray, labels: np.ndarray, mask: np.ndarray) -> float:
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise GnnError("empty mask")
    log_probs = log_softmax(logits[idx], axis=1)
    return float(-log_probs[np.arange(idx.size), labels[idx]].mean())


def loss_and_grad(model: GcnModel, cache: ForwardCache, logits: np.ndarray, labels: np.ndarray,
                  mask: np.ndarray, weight_decay: float = 0.0) -> Tuple[float, List[np.ndarray]]:
    """
    Mean masked softmax cross-entropy and its gradients.

    The returned loss is the cross-entropy alone; ``weight_decay * W`` is
    added to each gradient, i.e. the gradient of the objective
    CE + weight_decay / 2 * sum ||W||^2.
    """
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise GnnError("empty mask")
    log_probs = log_softmax(logits[idx], axis=1)
    rows = np.arange(idx.size)
    loss = float(-log_probs[rows, labels[idx]].mean())

    d_masked = np.exp(log_probs)
    d_masked[rows, labels[idx]] -= 1.0
    d_logits = np.zeros_like(logits)
    d_logits[idx] = d_masked / idx.size

    w1, w2 = model.layer1_weights, model.layer2_weights
    grad_w2 = cache.layer2_input.T @ d_logits
    d_a2 = d_logits @ w2.T
    if model.backbone == GCN:
        d_h1 = np.asarray(cache.operator.T @ d_a2)
    else:
        hidden = model.hidden_dim
        d_h1 = d_a2[:, :hidden] + np.asarray(cache.operator.T @ d_a2[:, hidden:])

    if cache.dropout_scale is not None:
        d_h1 = d_h1 * cache.dropout_scale
    d_z1 = d_h1 * (cache.pre_activation > 0.0)
    grad_w1 = cache.layer1_input.T @ d_z1

    if weight_decay:
        grad_w1 = grad_w1 + weight_decay * w1
        grad_w2 = grad_w2 + weight_decay * w2
    return loss, [grad_w1, grad_w2]
