"""Adam over a list of float64 parameter arrays."""

from dataclasses import dataclass, replace
from typing import List, Tuple

import numpy as np


@dataclass(frozen=True, eq=False)
class AdamState:
    """
    Moment estimates and hyperparameters.

    Weight decay is not applied here: callers fold it into the gradients
    (see ``loss_and_grad``), so ``weight_decay`` only records the value used.
    """
    first_moments: Tuple[np.ndarray, ...]
    second_moments: Tuple[np.ndarray, ...]
    learning_rate: float
    weight_decay: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0

    @classmethod
    def fresh(cls, params: List[np.ndarray], learning_rate: float,
              weight_decay: float = 0.0) -> "AdamState":
        zeros = tuple(np.zeros_like(p, dtype=np.float64) for p in params)
        return cls(first_moments=zeros, second_moments=tuple(z.copy() for z in zeros),
                   learning_rate=learning_rate, weight_decay=weight_decay)


def adam_update(params: List[np.ndarray], grads: List[np.ndarray],
                state: AdamState) -> Tuple[List[np.ndarray], AdamState]:
    if len(params) != len(grads) or len(params) != len(state.first_moments):
        raise ValueError("parameter, gradient and moment lists differ in length")
    step = state.step + 1
    b1, b2 = state.beta1, state.beta2
    new_params, firsts, seconds = [], [], []
    for p, g, m, v in zip(params, grads, state.first_moments, state.second_moments):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** step)
        v_hat = v / (1.0 - b2 ** step)
        new_params.append(p - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon))
        firsts.append(m)
        seconds.append(v)
    return new_params, replace(state, first_moments=tuple(firsts),
                               second_moments=tuple(seconds), step=step)


def adam_step(model, gradients: List[np.ndarray], state: AdamState):
    """Apply one Adam update to a model exposing ``weights()``/``with_weights()``."""
    params, state = adam_update(model.weights(), gradients, state)
    return model.with_weights(params), state
