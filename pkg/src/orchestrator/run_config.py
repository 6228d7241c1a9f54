"""
Validated configuration of a single run.
"""

from enum import Enum
from typing import Any, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..gnn.trainer import TrainConfig
from ..rl.ppo import PPOConfig


class RunMode(str, Enum):
    BASELINE = "baseline"
    RARE = "rare"
    FIXED_K = "fixed-k"
    RANDOM_K = "random-k"
    SHUFFLED = "shuffled"
    ADD_ONLY = "add-only"
    REMOVE_ONLY = "remove-only"
    AUC_REWARD = "auc-reward"


# Modes that train the GNN once on a fixed graph instead of running the agent
STATIC_MODES = {RunMode.BASELINE, RunMode.FIXED_K, RunMode.RANDOM_K}


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    dataset_path: str = ""
    mode: RunMode = RunMode.RARE
    backbone: str = "gcn"
    lam: float = Field(1.0, ge=0.0)
    lambda_r: float = Field(1.0, ge=0.0)
    split_seeds: List[int] = Field(default_factory=lambda: list(range(10)))
    iterations: int = Field(500, ge=1)
    threads: int = Field(1, ge=1)

    # mode parameters
    k: Optional[int] = Field(None, ge=0)
    d: Optional[int] = Field(None, ge=0)
    k_range: Optional[int] = Field(None, ge=0)

    # entropy
    embed_mode: str = "auto"
    embed_dim: int = Field(64, ge=1)
    embed_seed: int = 0
    dense_entropy_max_nodes: int = Field(20000, ge=1)
    blockwise_top_c: int = Field(64, ge=1)

    # gnn
    hidden_dim: int = Field(64, ge=1)
    dropout: float = Field(0.5, ge=0.0, lt=1.0)
    learning_rate: float = Field(0.05, gt=0.0)
    weight_decay: float = Field(5e-5, ge=0.0)
    refine_epochs: int = Field(20, ge=1)
    refine_patience: int = Field(5, ge=0)
    static_epochs: int = Field(200, ge=1)
    static_patience: int = Field(50, ge=0)

    # agent
    k_max: int = Field(10, ge=0)
    episode_horizon: int = Field(32, ge=1)
    ppo_clip: float = Field(0.2, gt=0.0)
    ppo_gamma: float = Field(0.99, ge=0.0, le=1.0)
    ppo_gae_lambda: float = Field(0.95, ge=0.0, le=1.0)
    ppo_rollout_length: int = Field(16, ge=1)
    ppo_update_epochs: int = Field(4, ge=1)
    ppo_learning_rate: float = Field(3e-4, gt=0.0)
    ppo_entropy_coef: float = Field(0.01, ge=0.0)
    ppo_value_coef: float = Field(0.5, ge=0.0)
    ppo_hidden_dim: int = Field(64, ge=1)

    small_class_policy: str = "error"

    @field_validator("mode", mode="before")
    @classmethod
    def normalize_mode(cls, v):
        if isinstance(v, str) and v == "shuffled-sequence":
            return RunMode.SHUFFLED
        return v

    @field_validator("backbone")
    @classmethod
    def validate_backbone(cls, v):
        if v not in ("gcn", "sage-mean"):
            raise ValueError("backbone must be 'gcn' or 'sage-mean'")
        return v

    @field_validator("split_seeds")
    @classmethod
    def validate_split_seeds(cls, v):
        if not v:
            raise ValueError("at least one split seed is required")
        return v

    @model_validator(mode="after")
    def check_mode_parameters(self):
        if self.mode == RunMode.FIXED_K and (self.k is None or self.d is None):
            raise ValueError("fixed-k mode needs both k and d")
        if self.mode == RunMode.RANDOM_K and self.k_range is None:
            raise ValueError("random-k mode needs k_range")
        return self

    @property
    def is_static(self) -> bool:
        return self.mode in STATIC_MODES

    @property
    def run_seed(self) -> int:
        """Seed for draws shared by every split of the run (the first split seed)."""
        return self.split_seeds[0]

    def refine_config(self) -> TrainConfig:
        return TrainConfig(epochs=self.refine_epochs, patience=self.refine_patience)

    def ppo_config(self) -> PPOConfig:
        return PPOConfig(clip=self.ppo_clip, gamma=self.ppo_gamma, gae_lambda=self.ppo_gae_lambda,
                         rollout_length=self.ppo_rollout_length, update_epochs=self.ppo_update_epochs,
                         learning_rate=self.ppo_learning_rate, entropy_coef=self.ppo_entropy_coef,
                         value_coef=self.ppo_value_coef)

    @classmethod
    def from_settings(cls, settings, **overrides: Any) -> "RunConfig":
        """Build a run configuration from application settings plus explicit overrides."""
        values = dict(
            backbone=settings.backbone,
            lam=settings.entropy_lambda,
            lambda_r=settings.reward_lambda,
            split_seeds=list(range(settings.split_seed, settings.split_seed + settings.split_count)),
            iterations=settings.iterations,
            threads=settings.threads,
            embed_mode=settings.embed_mode,
            embed_dim=settings.embed_dim,
            embed_seed=settings.embed_seed,
            dense_entropy_max_nodes=settings.dense_entropy_max_nodes,
            blockwise_top_c=settings.blockwise_top_c,
            hidden_dim=settings.hidden_dim,
            dropout=settings.dropout,
            learning_rate=settings.learning_rate,
            weight_decay=settings.weight_decay,
            refine_epochs=settings.refine_epochs,
            refine_patience=settings.refine_patience,
            static_epochs=settings.static_epochs,
            static_patience=settings.static_patience,
            k_max=settings.k_max,
            episode_horizon=settings.episode_horizon,
            ppo_clip=settings.ppo_clip,
            ppo_gamma=settings.ppo_gamma,
            ppo_gae_lambda=settings.ppo_gae_lambda,
            ppo_rollout_length=settings.ppo_rollout_length,
            ppo_update_epochs=settings.ppo_update_epochs,
            ppo_learning_rate=settings.ppo_learning_rate,
            ppo_entropy_coef=settings.ppo_entropy_coef,
            ppo_value_coef=settings.ppo_value_coef,
            ppo_hidden_dim=settings.ppo_hidden_dim,
            small_class_policy=settings.small_class_policy,
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)
