"""Two-layer GCN / GraphSAGE-mean classifier in numpy."""

from .operators import BACKBONES, GCN, SAGE, normalized_adjacency
from .model import GcnModel, GnnError, forward, init_model, loss_and_grad, masked_cross_entropy
from .optim import AdamState, adam_step, adam_update
from .trainer import (GnnSession, TrainConfig, TrainingHistory, TrainMetrics, evaluate,
                      macro_auc, masked_accuracy, train_epochs)
from .checkpoint import CheckpointFormatError, load_model, save_model

__all__ = [
    'BACKBONES', 'GCN', 'SAGE', 'normalized_adjacency', 'GcnModel', 'GnnError', 'forward',
    'init_model', 'loss_and_grad', 'masked_cross_entropy', 'AdamState', 'adam_step',
    'adam_update', 'GnnSession', 'TrainConfig', 'TrainingHistory', 'TrainMetrics', 'evaluate',
    'macro_auc', 'masked_accuracy', 'train_epochs', 'CheckpointFormatError', 'load_model',
    'save_model',
]
