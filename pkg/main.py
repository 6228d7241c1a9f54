"""
EntroWire - Main Entry Point
Relative-entropy graph rewiring with a reinforcement learning agent.
"""

import argparse
import logging
import os
import sys
import time
from pathlib import Path
from typing import List, Optional

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from pydantic import ValidationError

from src.entropy import EmbeddingConfig, EntropyError, compute_entropy, export_matrix_csv, load_table, save_table
from src.graph import load_dataset_dir
from src.orchestrator import (NonFiniteMetricError, RunConfig, emit_report, run, baseline, summarize_runs,
                              sweep)
from src.utils.config import get_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO = 1
EXIT_BAD_INPUT = 2
EXIT_NON_FINITE = 3

MODES = ['rare', 'fixed-k', 'random-k', 'shuffled', 'shuffled-sequence', 'add-only', 'remove-only', 'auc-reward']
BACKBONE_ALIASES = {'gcn': 'gcn', 'sage': 'sage-mean', 'sage-mean': 'sage-mean'}


def _parse_values(text: str) -> List[float]:
    return [float(v) for v in text.split(',') if v.strip()]


def _run_config(args, config, **overrides) -> RunConfig:
    return RunConfig.from_settings(
        config,
        dataset_path=str(args.graph),
        backbone=BACKBONE_ALIASES[args.backbone],
        split_seeds=list(range(args.seed, args.seed + args.splits)),
        **overrides,
    )


def cmd_entropy(args) -> int:
    """Precompute and store the relative entropy table of one dataset."""
    if args.lam < 0:
        raise EntropyError(f"--lambda must be >= 0, got {args.lam}")
    graph = load_dataset_dir(args.graph)
    embedding = EmbeddingConfig.from_name(args.embed, graph.num_features, args.embed_dim, args.seed)

    started = time.time()
    table = compute_entropy(graph, lam=args.lam, embedding=embedding, workers=args.threads)
    elapsed = time.time() - started
    save_table(table, args.out)
    if args.export_csv:
        export_matrix_csv(table, "combined", args.export_csv)

    print(f"N={table.num_nodes} lambda={table.lam} seconds={elapsed:.3f}")
    return EXIT_OK


def cmd_train(args, config) -> int:
    """Run the joint loop (or one of the ablation modes) and emit the report bundle."""
    run_config = _run_config(args, config, mode=args.mode, lam=args.lam, lambda_r=args.lambda_r,
                             iterations=args.iterations, k=args.k, d=args.d, k_range=args.k_range,
                             threads=args.threads)
    table = load_table(args.entropy) if args.entropy else None
    report = run(run_config, table=table)
    emit_report(report, args.out)
    _print_summary(report)
    return EXIT_OK


def cmd_baseline(args, config) -> int:
    """Train the plain backbone on the original graph."""
    run_config = _run_config(args, config, threads=args.threads)
    report = baseline(run_config)
    emit_report(report, args.out)
    _print_summary(report)
    return EXIT_OK


def cmd_sweep(args, config) -> int:
    """Repeat training over lambda values or fixed k = d values."""
    if args.values:
        values = _parse_values(args.values)
    elif args.param == 'lambda':
        values = config.get_lambda_sweep()
    else:
        values = list(range(1, config.k_max + 1))
    run_config = _run_config(args, config, iterations=args.iterations, threads=args.threads)
    table = load_table(args.entropy) if args.entropy else None
    reports = sweep(run_config, args.param, values, table=table, out_dir=args.out)

    print(f"{'=' * 60}")
    print(f"SWEEP OVER {args.param.upper()}")
    print(f"{'=' * 60}")
    for value, report in zip(values, reports):
        print(f"  {args.param}={value:<8} test acc {report.mean_test_accuracy:.4f} "
              f"+/- {report.std_test_accuracy:.4f}")
    return EXIT_OK


def cmd_report(args) -> int:
    """Summarise every run bundle under a directory and write plot-ready CSVs."""
    summary, curves = summarize_runs(args.input)
    in_dir = Path(args.input)
    summary.to_csv(in_dir / 'summary.csv', index=False)
    curves.to_csv(in_dir / 'curves.csv', index=False)
    print(summary.to_string(index=False))
    return EXIT_OK


def _print_summary(report) -> None:
    summary = report.summary()
    print(f"{'=' * 60}")
    print(f"RUN COMPLETE: {report.mode} ({report.backbone})")
    print(f"{'=' * 60}")
    print(f"  Splits:              {len(report.splits)}")
    print(f"  Mean test accuracy:  {report.mean_test_accuracy:.4f} +/- {report.std_test_accuracy:.4f}")
    print(f"  Homophily before:    {summary['original_homophily']}")
    print(f"  Homophily after:     {summary['best_homophily']}")
    print(f"  Edges before/after:  {summary['original_edges']} / {summary['best_edges']}")
    print(f"  Time elapsed:        {report.wall_clock_seconds:.1f}s")
    print(f"{'=' * 60}")


def build_parser(config) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="EntroWire: relative-entropy graph rewiring",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument('--debug', action='store_true', help='Enable debug logging')
    subparsers = parser.add_subparsers(dest='command', required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    def add_common(sub, entropy: bool):
        sub.add_argument('--graph', required=True, help='Dataset directory with content and edges files')
        if entropy:
            sub.add_argument('--entropy', default=None, help='Precomputed entropy table (computed if omitted)')
        sub.add_argument('--backbone', choices=sorted(BACKBONE_ALIASES), default=config.backbone,
                         help='GNN backbone')
        sub.add_argument('--splits', type=int, default=config.split_count, help='Number of data splits')
        sub.add_argument('--seed', type=int, default=config.split_seed, help='First split seed')
        sub.add_argument('--out', required=True, help='Output directory for the report bundle')
        sub.add_argument('--threads', type=int, default=config.threads, help='Parallel split workers')

    entropy = subparsers.add_parser('entropy', help='Precompute node relative entropy', formatter_class=fmt)
    entropy.add_argument('--graph', required=True, help='Dataset directory with content and edges files')
    entropy.add_argument('--lambda', dest='lam', type=float, default=config.entropy_lambda,
                         help='Structural entropy weight')
    entropy.add_argument('--embed', choices=['auto', 'identity', 'project'], default=config.embed_mode,
                         help='Feature embedding')
    entropy.add_argument('--embed-dim', type=int, default=config.embed_dim, help='Projection width')
    entropy.add_argument('--seed', type=int, default=config.embed_seed, help='Projection seed')
    entropy.add_argument('--out', required=True, help='Output table file')
    entropy.add_argument('--export-csv', default=None, help='Also dump the combined matrix as CSV')
    entropy.add_argument('--threads', type=int, default=config.threads, help='Worker threads')

    train = subparsers.add_parser('train', help='Joint GNN and agent training', formatter_class=fmt)
    add_common(train, entropy=True)
    train.add_argument('--mode', choices=MODES, default='rare', help='Run mode')
    train.add_argument('--lambda', dest='lam', type=float, default=config.entropy_lambda,
                       help='Structural entropy weight')
    train.add_argument('--lambda-r', type=float, default=config.reward_lambda, help='Reward loss weight')
    train.add_argument('--iterations', type=int, default=config.iterations, help='Co-training iterations')
    train.add_argument('--k', type=int, default=None, help='Added neighbours per node (fixed-k)')
    train.add_argument('--d', type=int, default=None, help='Deleted neighbours per node (fixed-k)')
    train.add_argument('--k-range', type=int, default=None, help='Upper bound of random k and d (random-k)')

    base = subparsers.add_parser('baseline', help='Plain backbone on the original graph', formatter_class=fmt)
    add_common(base, entropy=False)

    sweep_parser = subparsers.add_parser('sweep', help='Sweep lambda or fixed k', formatter_class=fmt)
    add_common(sweep_parser, entropy=True)
    sweep_parser.add_argument('--param', choices=['lambda', 'k'], default='lambda', help='Swept parameter')
    sweep_parser.add_argument('--values', default=None, help='Comma-separated values (default grid if omitted)')
    sweep_parser.add_argument('--iterations', type=int, default=config.iterations, help='Co-training iterations')

    report = subparsers.add_parser('report', help='Summarise run bundles', formatter_class=fmt)
    report.add_argument('--in', dest='input', required=True, help='Directory holding one or more runs')

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main function with CLI interface."""
    config = get_config()
    parser = build_parser(config)
    args = parser.parse_args(argv)

    # Set up logging level
    if args.debug:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        if args.command == 'entropy':
            return cmd_entropy(args)
        elif args.command == 'train':
            return cmd_train(args, config)
        elif args.command == 'baseline':
            return cmd_baseline(args, config)
        elif args.command == 'sweep':
            return cmd_sweep(args, config)
        elif args.command == 'report':
            return cmd_report(args)

    except NonFiniteMetricError as e:
        logger.error(f"Run aborted: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NON_FINITE
    except (ValidationError, ValueError) as e:
        logger.error(f"Invalid input: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except OSError as e:
        logger.error(f"I/O failure: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO

    return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
