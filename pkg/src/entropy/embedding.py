"""
Fixed node embedding used before feature entropy is computed.

The embedding is never trained: entropy is computed once before any model
sees a gradient, so the map must be deterministic.  Small feature spaces
pass through unchanged; wide ones are reduced with a seeded Gaussian
projection scaled by 1/sqrt(d).
"""

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

IDENTITY = "identity"
PROJECT = "project"
AUTO_MAX_DIM = 64


class EntropyError(ValueError):
    """Custom exception for entropy computation errors."""
    pass


@dataclass(frozen=True)
class EmbeddingConfig:
    """How node features are mapped to the vectors whose dot products feed the softmax."""
    target_dim: int
    projection_seed: int = 0
    mode: str = IDENTITY

    def __post_init__(self):
        if self.target_dim < 1:
            raise EntropyError("target_dim must be >= 1")
        if self.mode not in (IDENTITY, PROJECT):
            raise EntropyError(f"mode must be '{IDENTITY}' or '{PROJECT}', got '{self.mode}'")

    @classmethod
    def auto(cls, feature_dim: int, seed: int = 0, max_dim: int = AUTO_MAX_DIM) -> "EmbeddingConfig":
        """Identity when d <= max_dim, otherwise a seeded projection to max_dim."""
        if feature_dim <= max_dim:
            return cls(target_dim=feature_dim, projection_seed=seed, mode=IDENTITY)
        return cls(target_dim=max_dim, projection_seed=seed, mode=PROJECT)

    @classmethod
    def from_name(cls, name: str, feature_dim: int, target_dim: int = AUTO_MAX_DIM,
                  seed: int = 0) -> "EmbeddingConfig":
        """Resolve a CLI/config mode name ("auto", "identity", "project")."""
        if name == "auto":
            return cls.auto(feature_dim, seed=seed, max_dim=target_dim)
        if name == IDENTITY:
            return cls(target_dim=feature_dim, projection_seed=seed, mode=IDENTITY)
        return cls(target_dim=target_dim, projection_seed=seed, mode=PROJECT)


def projection_matrix(feature_dim: int, target_dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal((feature_dim, target_dim)) / np.sqrt(feature_dim)


def embed(features: np.ndarray, config: EmbeddingConfig) -> np.ndarray:
    """
    Apply the fixed embedding to an N x d feature matrix.

    Args:
        features: N x d real matrix
        config: embedding configuration consistent with d

    Returns:
        N x h matrix (the input itself in identity mode)
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise EntropyError(f"features must be 2-D, got shape {features.shape}")
    d = features.shape[1]

    if config.mode == IDENTITY:
        if config.target_dim != d:
            raise EntropyError(f"identity embedding requires target_dim == d ({config.target_dim} != {d})")
        return features

    projected = features @ projection_matrix(d, config.target_dim, config.projection_seed)
    logger.debug(f"Projected features {d} -> {config.target_dim} (seed={config.projection_seed})")
    return projected
