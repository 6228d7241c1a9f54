"""
Training, evaluation and the per-split GNN session.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.special import softmax
from sklearn.metrics import roc_auc_score

from ..graph.models import Graph, SplitMask
from .model import GcnModel, GnnError, forward, init_model, loss_and_grad, masked_cross_entropy
from .operators import normalized_adjacency
from .optim import AdamState, adam_step

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainMetrics:
    accuracy: float
    loss: float
    epoch: int = 0
    auc: float = float("nan")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    patience: int = 5


@dataclass
class TrainingHistory:
    """Per-epoch metrics; ``best_epoch`` is the epoch whose weights were kept."""
    train: List[TrainMetrics] = field(default_factory=list)
    validation: List[TrainMetrics] = field(default_factory=list)
    best_epoch: int = 0

    @property
    def epochs_run(self) -> int:
        return len(self.train)


def masked_accuracy(logits: np.ndarray, labels: np.ndarray, mask: np.ndarray) -> float:
    """Fraction of masked nodes whose argmax matches the label (ties go to the lowest class id)."""
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise GnnError("empty mask")
    return float(np.mean(np.argmax(logits[idx], axis=1) == labels[idx]))


def macro_auc(logits: np.ndarray, labels: np.ndarray, mask: np.ndarray) -> float:
    """
    One-vs-rest macro ROC-AUC over the masked nodes.

    Classes with no positive or no negative masked node are skipped;
    returns NaN when every class is skipped.
    """
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise GnnError("empty mask")
    probs = softmax(logits[idx], axis=1)
    y = labels[idx]
    scores = []
    for c in range(logits.shape[1]):
        positive = y == c
        if positive.all() or not positive.any():
            continue
        scores.append(roc_auc_score(positive, probs[:, c]))
    return float(np.mean(scores)) if scores else float("nan")


def evaluate(model: GcnModel, operator: sp.spmatrix, features: np.ndarray, labels: np.ndarray,
             mask: np.ndarray, epoch: int = 0, with_auc: bool = False) -> TrainMetrics:
    """Dropout-free forward pass scored on ``mask``. The model is not touched."""
    logits, _ = forward(model, operator, features, training=False)
    return TrainMetrics(
        accuracy=masked_accuracy(logits, labels, mask),
        loss=masked_cross_entropy(logits, labels, mask),
        epoch=epoch,
        auc=macro_auc(logits, labels, mask) if with_auc else float("nan"),
    )


def _fit_once(model: GcnModel, state: AdamState, operator: sp.spmatrix, features: np.ndarray,
              labels: np.ndarray, mask: np.ndarray, rng: np.random.Generator):
    logits, cache = forward(model, operator, features, training=True, rng=rng)
    loss, grads = loss_and_grad(model, cache, logits, labels, mask, weight_decay=state.weight_decay)
    model, state = adam_step(model, grads, state)
    return model, state, TrainMetrics(accuracy=masked_accuracy(logits, labels, mask), loss=loss)


def train_epochs(model: GcnModel, graph: Graph, masks: SplitMask, config: TrainConfig,
                 state: AdamState, rng: np.random.Generator,
                 operator: Optional[sp.spmatrix] = None):
    """
    Full-batch training with early stopping on validation loss.

    Training stops once validation loss has failed to improve for
    ``config.patience`` consecutive epochs (patience 0 runs one epoch).
    The weights from the epoch with the lowest validation loss are returned.

    Args:
        model: starting weights
        graph: graph whose features and labels are trained on
        masks: split masks; train drives the gradient, validation drives stopping
        config: epoch cap and patience
        state: Adam state carried across calls
        rng: dropout stream
        operator: precomputed aggregation operator for ``graph``

    Returns:
        (best model, Adam state, TrainingHistory)
    """
    if config.epochs < 1:
        raise GnnError("epochs must be >= 1")
    if operator is None:
        operator = normalized_adjacency(graph, model.backbone)

    history = TrainingHistory()
    best_model, best_loss, bad = model, float("inf"), 0
    for epoch in range(1, config.epochs + 1):
        model, state, train_metrics = _fit_once(model, state, operator, graph.features,
                                                graph.labels, masks.train, rng)
        val_metrics = evaluate(model, operator, graph.features, graph.labels, masks.validation, epoch=epoch)
        history.train.append(TrainMetrics(train_metrics.accuracy, train_metrics.loss, epoch))
        history.validation.append(val_metrics)

        if val_metrics.loss < best_loss:
            best_model, best_loss, bad = model, val_metrics.loss, 0
            history.best_epoch = epoch
        else:
            bad += 1
        if bad >= config.patience:
            break

    logger.debug(f"Trained {history.epochs_run} epochs, best epoch {history.best_epoch} "
                 f"(val loss {best_loss:.4f})")
    return best_model, state, history


class GnnSession:
    """
    One classifier bound to one split: weights, optimiser state, the
    aggregation operator of the current graph and a seeded dropout stream.
    """

    def __init__(self, graph: Graph, backbone: str = "gcn", hidden_dim: int = 64,
                 dropout: float = 0.5, learning_rate: float = 0.05,
                 weight_decay: float = 5e-5, seed: int = 0):
        self.rng = np.random.default_rng(seed)
        self.model = init_model(backbone, graph.num_features, hidden_dim, graph.num_classes,
                                dropout, self.rng)
        self.state = AdamState.fresh(self.model.weights(), learning_rate, weight_decay)
        self.graph = graph
        self.operator = normalized_adjacency(graph, backbone)

    def with_graph(self, graph: Graph) -> "GnnSession":
        """Point the session at a rewired graph, keeping weights and optimiser state."""
        if graph.num_nodes != self.graph.num_nodes:
            raise GnnError("rewired graph must keep the node set")
        self.graph = graph
        self.operator = normalized_adjacency(graph, self.model.backbone)
        return self

    def fit_epoch(self, mask: np.ndarray) -> TrainMetrics:
        self.model, self.state, metrics = _fit_once(self.model, self.state, self.operator,
                                                    self.graph.features, self.graph.labels,
                                                    mask, self.rng)
        return metrics

    def evaluate(self, mask: np.ndarray, with_auc: bool = False) -> TrainMetrics:
        return evaluate(self.model, self.operator, self.graph.features, self.graph.labels,
                        mask, with_auc=with_auc)

    def evaluate_split(self, masks: SplitMask) -> Tuple[TrainMetrics, TrainMetrics, TrainMetrics]:
        """Train, validation and test metrics from a single dropout-free forward pass."""
        logits, _ = forward(self.model, self.operator, self.graph.features, training=False)
        labels = self.graph.labels
        return tuple(TrainMetrics(accuracy=masked_accuracy(logits, labels, mask),
                                  loss=masked_cross_entropy(logits, labels, mask))
                     for mask in (masks.train, masks.validation, masks.test))

    def train(self, masks: SplitMask, config: TrainConfig) -> TrainingHistory:
        self.model, self.state, history = train_epochs(self.model, self.graph, masks, config,
                                                       self.state, self.rng, operator=self.operator)
        return history

    def snapshot(self) -> GcnModel:
        return self.model

    def restore(self, model: GcnModel) -> None:
        self.model = model
