"""Rewiring MDP and the PPO agent that drives it."""

from .environment import (RewardParams, RewireAction, RewireEnvironment, RewireError, RewireState,
                          apply_rewire, edit_sets, export_rollout_trace, reward, state_bounds,
                          trace_row, transition)
from .policy import (PolicyError, PolicyNet, action_log_probs, greedy_action, init_policy,
                     load_policy, ppo_loss_and_grad, sample_action, save_policy)
from .ppo import PPOConfig, RolloutBuffer, compute_gae, ppo_update

__all__ = [
    'RewardParams', 'RewireAction', 'RewireEnvironment', 'RewireError', 'RewireState',
    'apply_rewire', 'edit_sets', 'export_rollout_trace', 'reward', 'state_bounds', 'trace_row',
    'transition', 'PolicyError', 'PolicyNet', 'action_log_probs', 'greedy_action', 'init_policy',
    'load_policy', 'ppo_loss_and_grad', 'sample_action', 'save_policy', 'PPOConfig',
    'RolloutBuffer', 'compute_gae', 'ppo_update',
]
