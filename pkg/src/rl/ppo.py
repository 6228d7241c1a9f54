"""
Rollout storage, generalised advantage estimation and the PPO update.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .environment import RewireAction, RewireState
from .policy import PolicyError, PolicyNet, apply_gradients, ppo_loss_and_grad

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PPOConfig:
    clip: float = 0.2
    gamma: float = 0.99
    gae_lambda: float = 0.95
    rollout_length: int = 16
    update_epochs: int = 4
    learning_rate: float = 3e-4
    entropy_coef: float = 0.01
    value_coef: float = 0.5


@dataclass
class RolloutBuffer:
    """
    One rollout of (state, action, log-prob, value, reward, done) tuples.

    ``dones[t]`` is set when the episode ended after step t, so no value
    is bootstrapped across that boundary.
    """
    states: List[np.ndarray] = field(default_factory=list)
    choices: List[np.ndarray] = field(default_factory=list)
    log_probs: List[float] = field(default_factory=list)
    values: List[float] = field(default_factory=list)
    rewards: List[float] = field(default_factory=list)
    dones: List[bool] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rewards)

    def add(self, state: RewireState, action: RewireAction, log_prob: float, value: float,
            reward: float, done: bool) -> None:
        self.states.append(state.vector())
        self.choices.append(action.indices())
        self.log_probs.append(log_prob)
        self.values.append(value)
        self.rewards.append(reward)
        self.dones.append(done)

    def clear(self) -> None:
        for name in ("states", "choices", "log_probs", "values", "rewards", "dones"):
            getattr(self, name).clear()


def compute_gae(rewards: np.ndarray, values: np.ndarray, dones: np.ndarray, last_value: float,
                gamma: float = 0.99, gae_lambda: float = 0.95) -> Tuple[np.ndarray, np.ndarray]:
    """
    Returns:
        (advantages, returns) with returns = advantages + values
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    steps = rewards.shape[0]
    advantages = np.zeros(steps, dtype=np.float64)
    last_gae = 0.0
    for t in reversed(range(steps)):
        next_value = last_value if t == steps - 1 else values[t + 1]
        nonterminal = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_value * nonterminal - values[t]
        advantages[t] = last_gae = delta + gamma * gae_lambda * nonterminal * last_gae
    return advantages, advantages + values


def normalized(v: np.ndarray) -> np.ndarray:
    return (v - np.mean(v)) / max(1e-6, np.std(v))


def ppo_update(policy: PolicyNet, buffer: RolloutBuffer, config: PPOConfig,
               last_value: float = 0.0) -> Tuple[PolicyNet, Dict[str, float]]:
    """
    Several full-batch epochs of the clipped surrogate on one rollout.

    Returns:
        (updated policy, diagnostics averaged over epochs)
    """
    if len(buffer) == 0:
        raise PolicyError("cannot update from an empty rollout buffer")
    advantages, returns = compute_gae(buffer.rewards, buffer.values, buffer.dones, last_value,
                                      config.gamma, config.gae_lambda)
    advantages = normalized(advantages)
    states = np.stack(buffer.states)
    choices = np.stack(buffer.choices)
    old_log_probs = np.asarray(buffer.log_probs, dtype=np.float64)

    totals: Dict[str, float] = {}
    for _ in range(config.update_epochs):
        loss, grads, diagnostics = ppo_loss_and_grad(policy, states, choices, old_log_probs,
                                                     advantages, returns, clip=config.clip,
                                                     value_coef=config.value_coef,
                                                     entropy_coef=config.entropy_coef)
        policy = apply_gradients(policy, grads)
        diagnostics["loss"] = loss
        for key, value in diagnostics.items():
            totals[key] = totals.get(key, 0.0) + value / config.update_epochs

    logger.debug(f"PPO update on {len(buffer)} steps: loss {totals['loss']:.4f}, "
                 f"kl {totals['approx_kl']:.5f}")
    return policy, totals
