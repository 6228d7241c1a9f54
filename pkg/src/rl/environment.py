"""
The rewiring MDP.

State is a pair of per-node counters (k added neighbours, d deleted
neighbours).  Actions nudge every counter by -1, 0 or +1; the transition
clamps into the valid range.  The rewired graph is always rebuilt from the
ORIGINAL graph, so it is a pure function of the state.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..entropy.sequences import EntropySequence
from ..graph.analytics import homophily_ratio
from ..graph.models import Graph

logger = logging.getLogger(__name__)

ACTION_VALUES = np.array([-1, 0, 1], dtype=np.int64)
TRACE_COLUMNS = ["step", "reward", "mean_k", "mean_d", "homophily"]


class RewireError(ValueError):
    """Custom exception for rewiring state errors."""
    pass


@dataclass(frozen=True, eq=False)
class RewireState:
    k: np.ndarray
    d: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, num_nodes: int) -> "RewireState":
        return cls(k=np.zeros(num_nodes, dtype=np.int64), d=np.zeros(num_nodes, dtype=np.int64))

    @property
    def num_nodes(self) -> int:
        return int(self.k.shape[0])

    def vector(self) -> np.ndarray:
        """[k_1..k_N, d_1..d_N] as float64."""
        return np.concatenate([self.k, self.d]).astype(np.float64)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RewireState):
            return NotImplemented
        return (self.step == other.step and np.array_equal(self.k, other.k)
                and np.array_equal(self.d, other.d))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class RewireAction:
    dk: np.ndarray
    dd: np.ndarray

    @classmethod
    def from_indices(cls, indices: np.ndarray) -> "RewireAction":
        """Head choices 0/1/2 map to -1/0/+1; the first N heads drive k, the rest d."""
        indices = np.asarray(indices, dtype=np.int64)
        n = indices.shape[0] // 2
        values = ACTION_VALUES[indices]
        return cls(dk=values[:n], dd=values[n:])

    def indices(self) -> np.ndarray:
        return np.concatenate([self.dk, self.dd]).astype(np.int64) + 1

    def negated(self) -> "RewireAction":
        return RewireAction(dk=-self.dk, dd=-self.dd)


@dataclass(frozen=True)
class RewardParams:
    lambda_r: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.lambda_r) or self.lambda_r < 0:
            raise RewireError("lambda_r must be a finite non-negative number")


def state_bounds(graph: Graph, sequences: EntropySequence, k_max: int) -> Tuple[np.ndarray, np.ndarray]:
    """Per-node upper bounds for k (capped at ``k_max``) and d (original degree)."""
    if sequences.num_nodes != graph.num_nodes:
        raise RewireError(f"sequences cover {sequences.num_nodes} nodes, graph has {graph.num_nodes}")
    k_upper = np.minimum(k_max, sequences.add_lengths())
    d_upper = np.minimum(graph.degrees, sequences.delete_lengths())
    return k_upper, d_upper


def transition(state: RewireState, action: RewireAction, graph: Graph,
               sequences: EntropySequence, k_max: int = 10) -> RewireState:
    if action.dk.shape != state.k.shape or action.dd.shape != state.d.shape:
        raise RewireError("action and state sizes differ")
    k_upper, d_upper = state_bounds(graph, sequences, k_max)
    return RewireState(
        k=np.clip(state.k + action.dk, 0, k_upper),
        d=np.clip(state.d + action.dd, 0, d_upper),
        step=state.step + 1,
    )


def _pair_keys(v: int, targets: np.ndarray, n: int) -> np.ndarray:
    targets = np.asarray(targets, dtype=np.int64)
    return np.minimum(v, targets) * n + np.maximum(v, targets)


def edit_sets(original: Graph, state: RewireState,
              sequences: EntropySequence) -> Tuple[np.ndarray, np.ndarray]:
    """Sorted pair keys (u * N + v, u < v) nominated for removal and for addition."""
    n = original.num_nodes
    if state.num_nodes != n or sequences.num_nodes != n:
        raise RewireError(f"state covers {state.num_nodes} nodes, graph has {n}")
    if (state.k < 0).any() or (state.d < 0).any():
        raise RewireError("state counters must be non-negative")
    if (state.k > sequences.add_lengths()).any():
        raise RewireError("k exceeds the add candidate list")
    if (state.d > np.minimum(original.degrees, sequences.delete_lengths())).any():
        raise RewireError("d exceeds the original degree")

    removals = [_pair_keys(v, sequences.delete_candidates[v][:state.d[v]], n)
                for v in np.flatnonzero(state.d)]
    additions = [_pair_keys(v, sequences.add_candidates[v][:state.k[v]], n)
                 for v in np.flatnonzero(state.k)]
    empty = np.empty(0, dtype=np.int64)
    return (np.unique(np.concatenate(removals)) if removals else empty,
            np.unique(np.concatenate(additions)) if additions else empty)


def apply_rewire(original: Graph, state: RewireState, sequences: EntropySequence) -> Graph:
    """
    Rebuild the rewired graph from the original edge set.

    All removals happen first (the first d_v delete candidates of every
    node), then all additions (the first k_v add candidates).  A pair named
    by both endpoints counts once.
    """
    removed, added = edit_sets(original, state, sequences)
    if removed.size == 0 and added.size == 0:
        return original
    n = original.num_nodes
    keys = original.edge_keys()
    final = np.union1d(keys[~np.isin(keys, removed)], added)
    return original.with_edges(np.stack([final // n, final % n], axis=1))


def reward(curr, prev, params: RewardParams) -> float:
    """(acc_t - acc_{t-1}) + lambda_r * (loss_{t-1} - loss_t) on the training mask."""
    return (curr.accuracy - prev.accuracy) + params.lambda_r * (prev.loss - curr.loss)


class RewireEnvironment:
    """
    Reset/step wrapper around transition and apply_rewire.

    ``allow_add`` / ``allow_remove`` zero the matching half of the state
    after each transition, which yields the add-only and remove-only
    variants.  An episode ends after ``horizon`` steps.
    """

    def __init__(self, graph: Graph, sequences: EntropySequence, k_max: int = 10,
                 horizon: int = 32, allow_add: bool = True, allow_remove: bool = True):
        if horizon < 1:
            raise RewireError("horizon must be >= 1")
        self.graph = graph
        self.sequences = sequences
        self.k_max = k_max
        self.horizon = horizon
        self.allow_add = allow_add
        self.allow_remove = allow_remove
        self.state = RewireState.zeros(graph.num_nodes)

    def reset(self) -> RewireState:
        self.state = RewireState.zeros(self.graph.num_nodes)
        return self.state

    def step(self, action: RewireAction) -> Tuple[RewireState, Graph, bool]:
        state = transition(self.state, action, self.graph, self.sequences, self.k_max)
        if not self.allow_add:
            state = RewireState(k=np.zeros_like(state.k), d=state.d, step=state.step)
        if not self.allow_remove:
            state = RewireState(k=state.k, d=np.zeros_like(state.d), step=state.step)
        self.state = state
        done = state.step >= self.horizon
        return state, apply_rewire(self.graph, state, self.sequences), done


def trace_row(step: int, reward_value: float, state: RewireState, graph: Graph) -> Dict[str, float]:
    return {
        "step": step,
        "reward": reward_value,
        "mean_k": float(state.k.mean()),
        "mean_d": float(state.d.mean()),
        "homophily": homophily_ratio(graph) if graph.num_edges else float("nan"),
    }


def export_rollout_trace(rows: Sequence[Dict[str, float]], path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(list(rows), columns=TRACE_COLUMNS).to_csv(path, index=False)
    logger.info(f"Wrote rollout trace with {len(rows)} rows to {path}")
