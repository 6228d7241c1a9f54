"""Brute-force reference implementations for the test suite."""

from .brute_force import (OracleError, OracleReport, oracle_best_state, oracle_edit_sets, oracle_entropy,
                          oracle_grad, oracle_ranked_states, oracle_rewire, oracle_sequences)

__all__ = [
    'OracleError', 'OracleReport', 'oracle_best_state', 'oracle_edit_sets', 'oracle_entropy',
    'oracle_grad', 'oracle_ranked_states', 'oracle_rewire', 'oracle_sequences',
]
