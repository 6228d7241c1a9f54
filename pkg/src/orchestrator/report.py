"""
Run reports and their on-disk bundle.

A bundle directory holds:
    metrics.csv     per-iteration series of every split
    report.json     summary statistics
    optimized.edges edge list of the best rewired graph
    rollout.csv     agent trace of the best split (agent modes only)
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..graph.analytics import homophily_ratio
from ..graph.loader import GraphLoadError, export_edgelist, load_dataset_dir, read_edgelist
from ..graph.models import Graph
from ..rl.environment import export_rollout_trace

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.csv"
REPORT_FILE = "report.json"
EDGES_FILE = "optimized.edges"
TRACE_FILE = "rollout.csv"
METRIC_COLUMNS = ["iteration", "split", "train_acc", "val_acc", "test_acc", "loss",
                  "homophily", "mean_reward", "mean_k", "mean_d"]

PathLike = Union[str, Path]


class OrchestratorError(ValueError):
    """Custom exception for run orchestration errors."""
    pass


class NonFiniteMetricError(OrchestratorError):
    """Raised when a run produces a NaN or infinite metric."""
    pass


@dataclass(frozen=True)
class SeriesRow:
    iteration: int
    split: int
    train_acc: float
    val_acc: float
    test_acc: float
    loss: float
    homophily: float
    mean_reward: float
    mean_k: float
    mean_d: float


@dataclass
class SplitResult:
    """Outcome of one split: test accuracy at the best-validation iteration and its graph."""
    seed: int
    test_accuracy: float
    best_val_accuracy: float
    best_iteration: int
    best_graph: Graph
    rows: List[SeriesRow] = field(default_factory=list)
    refinement_iterations: List[int] = field(default_factory=list)
    refinement_epochs: List[int] = field(default_factory=list)
    trace: List[Dict[str, float]] = field(default_factory=list)

    @property
    def best_homophily(self) -> float:
        return safe_homophily(self.best_graph)


@dataclass
class RunReport:
    mode: str
    backbone: str
    lam: float
    dataset_path: str
    original_graph: Graph
    splits: List[SplitResult] = field(default_factory=list)
    wall_clock_seconds: float = 0.0

    @property
    def series(self) -> List[SeriesRow]:
        return [row for split in self.splits for row in split.rows]

    @property
    def test_accuracies(self) -> List[float]:
        return [s.test_accuracy for s in self.splits]

    @property
    def mean_test_accuracy(self) -> float:
        return float(np.mean(self.test_accuracies)) if self.splits else float("nan")

    @property
    def std_test_accuracy(self) -> float:
        return float(np.std(self.test_accuracies)) if self.splits else float("nan")

    @property
    def best_split(self) -> Optional[SplitResult]:
        """Split with the highest best-validation accuracy (earliest seed on ties)."""
        if not self.splits:
            return None
        return max(self.splits, key=lambda s: s.best_val_accuracy)

    @property
    def best_graph(self) -> Graph:
        best = self.best_split
        return best.best_graph if best is not None else self.original_graph

    def summary(self) -> Dict[str, Any]:
        best = self.best_split
        return {
            "mode": self.mode,
            "backbone": self.backbone,
            "lambda": self.lam,
            "dataset": self.dataset_path,
            "num_nodes": self.original_graph.num_nodes,
            "original_edges": self.original_graph.num_edges,
            "original_homophily": safe_homophily(self.original_graph),
            "best_split": best.seed if best is not None else None,
            "best_edges": self.best_graph.num_edges,
            "best_homophily": safe_homophily(self.best_graph),
            "mean_test_accuracy": self.mean_test_accuracy,
            "std_test_accuracy": self.std_test_accuracy,
            "splits": [
                {
                    "seed": s.seed,
                    "test_accuracy": s.test_accuracy,
                    "best_val_accuracy": s.best_val_accuracy,
                    "best_iteration": s.best_iteration,
                    "best_homophily": s.best_homophily,
                    "refinement_iterations": s.refinement_iterations,
                    "refinement_epochs": s.refinement_epochs,
                }
                for s in self.splits
            ],
            "wall_clock_seconds": self.wall_clock_seconds,
        }


def safe_homophily(graph: Graph) -> Optional[float]:
    """Homophily ratio, or None for an edgeless graph."""
    return homophily_ratio(graph) if graph.num_edges else None


def series_frame(rows: List[SeriesRow]) -> pd.DataFrame:
    return pd.DataFrame([asdict(r) for r in rows], columns=METRIC_COLUMNS)


def emit_report(report: RunReport, out_dir: PathLike) -> Path:
    """Write metrics.csv, report.json, optimized.edges and, for agent runs, rollout.csv."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    series_frame(report.series).to_csv(out_dir / METRICS_FILE, index=False, float_format="%.17g")
    with (out_dir / REPORT_FILE).open("w") as fh:
        json.dump(report.summary(), fh, indent=2, sort_keys=True)
    export_edgelist(report.best_graph, out_dir / EDGES_FILE)
    best = report.best_split
    if best is not None and best.trace:
        export_rollout_trace(best.trace, out_dir / TRACE_FILE)

    logger.info(f"Report for mode {report.mode} written to {out_dir} "
                f"(mean test acc {report.mean_test_accuracy:.4f})")
    return out_dir


def find_run_dirs(directory: PathLike) -> List[Path]:
    """Run bundles at ``directory`` itself or anywhere beneath it, sorted by path."""
    directory = Path(directory)
    return sorted({p.parent for p in directory.rglob(REPORT_FILE)})


def _homophily_after(run_dir: Path, summary: Dict[str, Any]) -> Optional[float]:
    edges_path = run_dir / EDGES_FILE
    try:
        graph = load_dataset_dir(summary["dataset"]).with_edges(read_edgelist(edges_path))
    except (GraphLoadError, KeyError) as e:
        logger.warning(f"Using stored homophily for {run_dir}: {e}")
        return summary.get("best_homophily")
    return safe_homophily(graph)


def summarize_runs(directory: PathLike) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    Collect every run bundle under ``directory``.

    Returns:
        (summary with one row per run, tall-format curves with columns
         run, iteration, split, metric, value)
    """
    run_dirs = find_run_dirs(directory)
    if not run_dirs:
        raise OrchestratorError(f"No run reports found under {directory}")

    summaries, curves = [], []
    for run_dir in run_dirs:
        for required in (METRICS_FILE, EDGES_FILE):
            if not (run_dir / required).exists():
                raise OrchestratorError(f"Missing {required} in {run_dir}")
        with (run_dir / REPORT_FILE).open() as fh:
            summary = json.load(fh)
        name = str(run_dir.relative_to(directory)) if run_dir != Path(directory) else run_dir.name
        summaries.append({
            "run": name,
            "mode": summary.get("mode"),
            "backbone": summary.get("backbone"),
            "lambda": summary.get("lambda"),
            "mean_test_accuracy": summary.get("mean_test_accuracy"),
            "std_test_accuracy": summary.get("std_test_accuracy"),
            "homophily_before": summary.get("original_homophily"),
            "homophily_after": _homophily_after(run_dir, summary),
        })
        metrics = pd.read_csv(run_dir / METRICS_FILE)
        tall = metrics.melt(id_vars=["iteration", "split"], var_name="metric", value_name="value")
        tall.insert(0, "run", name)
        curves.append(tall)

    return pd.DataFrame(summaries), pd.concat(curves, ignore_index=True)
