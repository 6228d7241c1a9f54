"""
MLP policy with one three-way categorical head per state coordinate.

Trunk: 2N -> hidden (tanh).  Heads: hidden -> 2N x 3 logits.  Value: hidden -> 1.
The clipped PPO objective is differentiated by hand.
"""

import logging
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np
from scipy.special import log_softmax

from ..gnn.optim import AdamState, adam_update
from .environment import RewireAction, RewireState

logger = logging.getLogger(__name__)

NUM_CHOICES = 3
HEAD_INIT_SCALE = 0.01
PARAM_NAMES = ("trunk_weights", "trunk_bias", "head_weights", "head_bias", "value_weights", "value_bias")


class PolicyError(ValueError):
    """Custom exception for policy network errors."""
    pass


@dataclass(frozen=True, eq=False)
class PolicyNet:
    trunk_weights: np.ndarray
    trunk_bias: np.ndarray
    head_weights: np.ndarray
    head_bias: np.ndarray
    value_weights: np.ndarray
    value_bias: np.ndarray
    k_max: int
    optimizer: AdamState

    @property
    def num_heads(self) -> int:
        return self.trunk_weights.shape[0]

    @property
    def num_nodes(self) -> int:
        return self.num_heads // 2

    @property
    def hidden_dim(self) -> int:
        return self.trunk_weights.shape[1]

    def params(self) -> List[np.ndarray]:
        return [getattr(self, name) for name in PARAM_NAMES]

    def with_params(self, params: List[np.ndarray], optimizer: AdamState) -> "PolicyNet":
        return replace(self, optimizer=optimizer, **dict(zip(PARAM_NAMES, params)))


def init_policy(num_nodes: int, k_max: int, rng: np.random.Generator, hidden_dim: int = 64,
                learning_rate: float = 3e-4, head_scale: float = HEAD_INIT_SCALE) -> PolicyNet:
    """
    Fresh policy.  Head weights are drawn at ``head_scale`` so every head
    starts close to uniform; ``head_scale=0`` makes them exactly uniform.
    """
    if num_nodes < 1:
        raise PolicyError("policy needs at least one node")
    inputs = 2 * num_nodes
    params = [
        rng.standard_normal((inputs, hidden_dim)) / np.sqrt(inputs),
        np.zeros(hidden_dim),
        head_scale * rng.standard_normal((hidden_dim, inputs * NUM_CHOICES)),
        np.zeros(inputs * NUM_CHOICES),
        rng.standard_normal(hidden_dim) / np.sqrt(hidden_dim),
        np.zeros(1),
    ]
    return PolicyNet(*params, k_max=k_max, optimizer=AdamState.fresh(params, learning_rate))


def _trunk(policy: PolicyNet, states: np.ndarray):
    x = np.atleast_2d(np.asarray(states, dtype=np.float64))
    if x.shape[1] != policy.num_heads:
        raise PolicyError(f"state has {x.shape[1]} entries, policy expects {policy.num_heads}")
    x = x / policy.k_max
    hidden = np.tanh(x @ policy.trunk_weights + policy.trunk_bias)
    logits = (hidden @ policy.head_weights + policy.head_bias).reshape(x.shape[0], policy.num_heads, NUM_CHOICES)
    if not np.isfinite(logits).all():
        raise PolicyError("non-finite policy logits")
    values = hidden @ policy.value_weights + policy.value_bias[0]
    return x, hidden, logits, values


def head_log_probs(policy: PolicyNet, state: RewireState) -> Tuple[np.ndarray, float]:
    """Per-head log-probabilities (2N x 3) and the value estimate for one state."""
    _, _, logits, values = _trunk(policy, state.vector())
    return log_softmax(logits[0], axis=-1), float(values[0])


def sample_action(policy: PolicyNet, state: RewireState,
                  rng: np.random.Generator) -> Tuple[RewireAction, float, float]:
    """
    Draw one choice per head by inverse-CDF sampling.

    Returns:
        (action, joint log-probability, value estimate)
    """
    log_probs, value = head_log_probs(policy, state)
    cdf = np.cumsum(np.exp(log_probs), axis=1)
    u = rng.random(policy.num_heads)
    choices = np.minimum((u[:, None] >= cdf).sum(axis=1), NUM_CHOICES - 1)
    log_prob = float(log_probs[np.arange(policy.num_heads), choices].sum())
    return RewireAction.from_indices(choices), log_prob, value


def greedy_action(policy: PolicyNet, state: RewireState) -> RewireAction:
    log_probs, _ = head_log_probs(policy, state)
    return RewireAction.from_indices(np.argmax(log_probs, axis=1))


def action_log_probs(policy: PolicyNet, states: np.ndarray, choices: np.ndarray) -> np.ndarray:
    """Joint log-probability of each batch row's head choices."""
    _, _, logits, _ = _trunk(policy, states)
    log_probs = log_softmax(logits, axis=-1)
    chosen = np.take_along_axis(log_probs, np.asarray(choices)[:, :, None], axis=-1)[..., 0]
    return chosen.sum(axis=1)


def ppo_loss_and_grad(policy: PolicyNet, states: np.ndarray, choices: np.ndarray,
                      old_log_probs: np.ndarray, advantages: np.ndarray, returns: np.ndarray,
                      clip: float = 0.2, value_coef: float = 0.5,
                      entropy_coef: float = 0.01) -> Tuple[float, List[np.ndarray], Dict[str, float]]:
    """
    Loss = -mean(min(r A, clip(r, 1-eps, 1+eps) A)) + value_coef * mean((V - R)^2)
           - entropy_coef * mean(sum of head entropies)

    Args:
        policy: current parameters
        states: B x 2N raw state vectors
        choices: B x 2N head choices in {0, 1, 2}
        old_log_probs: joint log-probabilities under the rollout policy
        advantages: normalised advantages
        returns: value targets

    Returns:
        (loss, gradients in ``PARAM_NAMES`` order, diagnostics)
    """
    x, hidden, logits, values = _trunk(policy, states)
    batch = x.shape[0]
    choices = np.asarray(choices, dtype=np.int64)
    log_probs = log_softmax(logits, axis=-1)
    probs = np.exp(log_probs)

    new_log_probs = np.take_along_axis(log_probs, choices[:, :, None], axis=-1)[..., 0].sum(axis=1)
    ratio = np.exp(new_log_probs - old_log_probs)
    clipped = np.clip(ratio, 1.0 - clip, 1.0 + clip)
    unclipped_obj = ratio * advantages
    clipped_obj = clipped * advantages
    policy_loss = -float(np.mean(np.minimum(unclipped_obj, clipped_obj)))

    head_entropy = -(probs * log_probs).sum(axis=-1)
    entropy = float(head_entropy.sum(axis=1).mean())
    value_loss = float(np.mean((values - returns) ** 2))
    loss = policy_loss + value_coef * value_loss - entropy_coef * entropy

    # d loss / d joint log-prob: only rows where the unclipped branch is the min
    active = unclipped_obj <= clipped_obj
    d_logp = -(advantages * ratio * active) / batch
    onehot = np.zeros_like(probs)
    np.put_along_axis(onehot, choices[:, :, None], 1.0, axis=-1)
    d_logits = d_logp[:, None, None] * (onehot - probs)
    d_logits += (entropy_coef / batch) * probs * (log_probs + head_entropy[..., None])
    d_logits = d_logits.reshape(batch, -1)
    d_values = 2.0 * value_coef * (values - returns) / batch

    grad_head_w = hidden.T @ d_logits
    grad_head_b = d_logits.sum(axis=0)
    grad_value_w = hidden.T @ d_values
    grad_value_b = np.array([d_values.sum()])
    d_hidden = d_logits @ policy.head_weights.T + d_values[:, None] * policy.value_weights
    d_pre = d_hidden * (1.0 - hidden ** 2)
    grad_trunk_w = x.T @ d_pre
    grad_trunk_b = d_pre.sum(axis=0)

    diagnostics = {
        "policy_loss": policy_loss,
        "value_loss": value_loss,
        "entropy": entropy,
        "clip_fraction": float(np.mean(np.abs(ratio - 1.0) > clip)),
        "approx_kl": float(np.mean(old_log_probs - new_log_probs)),
    }
    return loss, [grad_trunk_w, grad_trunk_b, grad_head_w, grad_head_b, grad_value_w, grad_value_b], diagnostics


def apply_gradients(policy: PolicyNet, grads: List[np.ndarray]) -> PolicyNet:
    params, optimizer = adam_update(policy.params(), grads, policy.optimizer)
    return policy.with_params(params, optimizer)


# ----------------------------------------------------------------------
# Checkpoints: magic b"RPPO", version u32, N u64, hidden u64, k_max u64,
# then the six parameter arrays in PARAM_NAMES order as row-major f64.
# ----------------------------------------------------------------------

MAGIC = b"RPPO"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQQQ")


def _shapes(num_nodes: int, hidden: int) -> List[Tuple[int, ...]]:
    inputs = 2 * num_nodes
    return [(inputs, hidden), (hidden,), (hidden, inputs * NUM_CHOICES),
            (inputs * NUM_CHOICES,), (hidden,), (1,)]


def save_policy(policy: PolicyNet, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, policy.num_nodes, policy.hidden_dim, policy.k_max))
        for param in policy.params():
            fh.write(np.ascontiguousarray(param, dtype="<f8").tobytes())
    logger.info(f"Saved policy for N={policy.num_nodes} to {path}")


def load_policy(path: Union[str, Path], learning_rate: float = 3e-4) -> PolicyNet:
    """Read a policy checkpoint.  Optimiser moments are not stored and start fresh."""
    path = Path(path)
    if not path.exists():
        raise PolicyError(f"Policy checkpoint not found: {path}")
    payload = path.read_bytes()
    if len(payload) < _HEADER.size:
        raise PolicyError(f"{path}: truncated header")
    magic, version, num_nodes, hidden, k_max = _HEADER.unpack_from(payload, 0)
    if magic != MAGIC:
        raise PolicyError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise PolicyError(f"{path}: unsupported format version {version}")
    shapes = _shapes(num_nodes, hidden)
    sizes = [int(np.prod(s)) for s in shapes]
    if len(payload) != _HEADER.size + 8 * sum(sizes):
        raise PolicyError(f"{path}: payload size does not match N={num_nodes}, hidden={hidden}")

    params, offset = [], _HEADER.size
    for shape, size in zip(shapes, sizes):
        block = np.frombuffer(payload, dtype="<f8", count=size, offset=offset)
        params.append(block.astype(np.float64).reshape(shape))
        offset += 8 * size
    return PolicyNet(*params, k_max=k_max, optimizer=AdamState.fresh(params, learning_rate))
