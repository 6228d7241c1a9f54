"""
Configuration management for EntroWire.
Handles loading and validation of environment variables and run defaults.
"""

import os
import logging
from pathlib import Path
from typing import List, Optional
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings
from dotenv import load_dotenv


class EntroWireConfig(BaseSettings):
    """Main configuration class for EntroWire."""

    # ============================================================================
    # PARALLELISM
    # ============================================================================
    threads: int = Field(default_factory=lambda: os.cpu_count() or 1)

    # ============================================================================
    # ENTROPY CONFIGURATION
    # ============================================================================
    entropy_lambda: float = Field(1.0)
    embed_mode: str = Field("auto")  # auto, identity or project
    embed_dim: int = Field(64)
    embed_seed: int = Field(0)
    dense_entropy_max_nodes: int = Field(20000)
    blockwise_top_c: int = Field(64)

    # ============================================================================
    # GNN CONFIGURATION
    # ============================================================================
    backbone: str = Field("gcn")  # gcn or sage-mean
    hidden_dim: int = Field(64)
    dropout: float = Field(0.5)
    learning_rate: float = Field(0.05)
    weight_decay: float = Field(5e-5)
    refine_epochs: int = Field(20)
    refine_patience: int = Field(5)
    static_epochs: int = Field(200)
    static_patience: int = Field(50)

    # ============================================================================
    # REINFORCEMENT LEARNING CONFIGURATION
    # ============================================================================
    k_max: int = Field(10)
    reward_lambda: float = Field(1.0)
    ppo_clip: float = Field(0.2)
    ppo_gamma: float = Field(0.99)
    ppo_gae_lambda: float = Field(0.95)
    ppo_rollout_length: int = Field(16)
    ppo_update_epochs: int = Field(4)
    ppo_learning_rate: float = Field(3e-4)
    ppo_entropy_coef: float = Field(0.01)
    ppo_value_coef: float = Field(0.5)
    ppo_hidden_dim: int = Field(64)
    episode_horizon: int = Field(32)

    # ============================================================================
    # ORCHESTRATION
    # ============================================================================
    iterations: int = Field(500)
    split_count: int = Field(10)
    split_seed: int = Field(0)
    small_class_policy: str = Field("error")  # error or train
    output_dir: str = Field("./runs/")

    # ============================================================================
    # LOGGING CONFIGURATION
    # ============================================================================
    log_level: str = Field("INFO")
    log_file_path: str = Field("./logs/entrowire.log")

    # ============================================================================
    # DEVELOPMENT SETTINGS
    # ============================================================================
    environment: str = Field("development")

    model_config = {
        "env_prefix": "RARE_",
        "env_file": ".env",
        "env_file_encoding": "utf-8",
        "case_sensitive": False,
        "extra": "ignore"  # Allow extra fields in .env file
    }

    @field_validator("threads", "embed_dim", "hidden_dim", "k_max", "iterations",
                     "split_count", "ppo_rollout_length", "ppo_update_epochs",
                     "ppo_hidden_dim", "episode_horizon", "blockwise_top_c")
    @classmethod
    def validate_positive(cls, v):
        """Counts and widths must be at least one."""
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    @field_validator("entropy_lambda", "reward_lambda", "weight_decay")
    @classmethod
    def validate_nonnegative(cls, v):
        """Mixing weights and decay cannot be negative."""
        if v < 0:
            raise ValueError("must be >= 0")
        return v

    @field_validator("dropout")
    @classmethod
    def validate_dropout(cls, v):
        """Dropout rate lives in [0, 1)."""
        if not 0.0 <= v < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        return v

    @field_validator("embed_mode")
    @classmethod
    def validate_embed_mode(cls, v):
        valid_modes = ["auto", "identity", "project"]
        if v.lower() not in valid_modes:
            raise ValueError(f"embed_mode must be one of {valid_modes}")
        return v.lower()

    @field_validator("backbone")
    @classmethod
    def validate_backbone(cls, v):
        valid_backbones = ["gcn", "sage-mean"]
        if v.lower() not in valid_backbones:
            raise ValueError(f"backbone must be one of {valid_backbones}")
        return v.lower()

    @field_validator("small_class_policy")
    @classmethod
    def validate_small_class_policy(cls, v):
        if v.lower() not in ("error", "train"):
            raise ValueError("small_class_policy must be 'error' or 'train'")
        return v.lower()

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v):
        """Validate log level is valid."""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in valid_levels:
            raise ValueError(f"log_level must be one of {valid_levels}")
        return v.upper()

    def get_lambda_sweep(self) -> List[float]:
        """Default values for the structural-entropy weight sweep."""
        return [0.1, 1.0, 10.0]

    def ensure_directories_exist(self):
        """Create necessary directories if they don't exist."""
        directories = [
            self.output_dir,
            Path(self.log_file_path).parent,
        ]

        for directory in directories:
            Path(directory).mkdir(parents=True, exist_ok=True)

    def setup_logging(self):
        """Configure logging based on settings."""
        Path(self.log_file_path).parent.mkdir(parents=True, exist_ok=True)

        logging.basicConfig(
            level=getattr(logging, self.log_level),
            format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            handlers=[
                logging.FileHandler(self.log_file_path),
                logging.StreamHandler()
            ]
        )


def load_config(setup_logging: bool = True) -> EntroWireConfig:
    """Load and return configuration, creating directories as needed."""
    # Load environment variables from .env file
    load_dotenv()

    try:
        config = EntroWireConfig()
        if setup_logging:
            config.ensure_directories_exist()
            config.setup_logging()

        logger = logging.getLogger(__name__)
        logger.info(f"Configuration loaded for environment: {config.environment} "
                    f"(threads={config.threads})")
        return config

    except Exception as e:
        print(f"Error loading configuration: {e}")
        print("Please check your .env file and RARE_* environment variables.")
        print("Use env_template.txt as a reference.")
        raise


# Global configuration instance
config: Optional[EntroWireConfig] = None


def get_config() -> EntroWireConfig:
    """Get the global configuration instance."""
    global config
    if config is None:
        config = load_config()
    return config


def reload_config() -> EntroWireConfig:
    """Reload configuration from environment."""
    global config
    config = None
    return get_config()
