"""Runs, ablation modes and report bundles."""

from .report import (EDGES_FILE, METRIC_COLUMNS, METRICS_FILE, REPORT_FILE, NonFiniteMetricError,
                     OrchestratorError, RunReport, SeriesRow, SplitResult, emit_report,
                     summarize_runs)
from .run_config import STATIC_MODES, RunConfig, RunMode
from .runner import (baseline, prepare_sequences, run, run_agent_split, run_static_split,
                     static_state, sweep)

__all__ = [
    'EDGES_FILE', 'METRIC_COLUMNS', 'METRICS_FILE', 'REPORT_FILE', 'NonFiniteMetricError',
    'OrchestratorError', 'RunReport', 'SeriesRow', 'SplitResult', 'emit_report', 'summarize_runs',
    'STATIC_MODES', 'RunConfig', 'RunMode', 'baseline', 'prepare_sequences', 'run',
    'run_agent_split', 'run_static_split', 'static_state', 'sweep',
]
