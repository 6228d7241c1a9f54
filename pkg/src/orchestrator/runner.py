"""
End-to-end runs: entropy sequences once, then per split either a static
GNN fit (baseline, fixed-k, random-k) or the joint GNN/agent loop.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from functools import partial
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..entropy.blockwise import blockwise_sequences
from ..entropy.embedding import EmbeddingConfig, embed
from ..entropy.relative_entropy import EntropyTable, compute_entropy, relative_entropy
from ..entropy.sequences import EntropySequence, build_sequences, shuffle_sequences
from ..gnn.trainer import GnnSession, TrainMetrics
from ..graph.analytics import stratified_split
from ..graph.loader import load_dataset_dir
from ..graph.models import Graph, SplitMask
from ..rl.environment import (RewardParams, RewireEnvironment, RewireState, apply_rewire, reward,
                              state_bounds, trace_row)
from ..rl.policy import head_log_probs, init_policy, sample_action
from ..rl.ppo import RolloutBuffer, ppo_update
from .report import (NonFiniteMetricError, OrchestratorError, RunReport, SeriesRow, SplitResult,
                     emit_report, safe_homophily)
from .run_config import RunConfig, RunMode

logger = logging.getLogger(__name__)

SWEEP_PARAMETERS = ("lambda", "k")


# ============================================================================
# ENTROPY SEQUENCES
# ============================================================================

def prepare_sequences(graph: Graph, config: RunConfig,
                      table: Optional[EntropyTable] = None) -> EntropySequence:
    """
    Entropy sequences for the run, computed once and shared by every split.

    A precomputed table is re-mixed with the run's lambda.  Without one,
    graphs above ``dense_entropy_max_nodes`` use the blockwise path.
    Shuffled mode permutes every list before truncation to ``k_max``.
    """
    n = graph.num_nodes
    if table is not None:
        if table.num_nodes != n:
            raise OrchestratorError(f"entropy table covers {table.num_nodes} nodes, graph has {n}")
        if table.lam != config.lam:
            table = relative_entropy(table.feature, table.structural, config.lam)
        sequences = build_sequences(table, graph)
    elif n <= config.dense_entropy_max_nodes:
        embedding = EmbeddingConfig.from_name(config.embed_mode, graph.num_features,
                                              config.embed_dim, config.embed_seed)
        table = compute_entropy(graph, lam=config.lam, embedding=embedding, workers=config.threads)
        sequences = build_sequences(table, graph)
    else:
        embedding = EmbeddingConfig.from_name(config.embed_mode, graph.num_features,
                                              config.embed_dim, config.embed_seed)
        top_c = max(config.blockwise_top_c, config.k_max)
        if config.mode == RunMode.SHUFFLED:
            logger.warning("Shuffled mode on the blockwise path only permutes the top candidates")
        sequences = blockwise_sequences(graph, embed(graph.features, embedding), config.lam, top_c)

    if config.mode == RunMode.SHUFFLED:
        sequences = shuffle_sequences(sequences, np.random.default_rng(config.embed_seed))
    return sequences.truncated(config.k_max)


# ============================================================================
# SPLIT PROCEDURES
# ============================================================================

def _check_finite(split: int, iteration: int, *metrics: TrainMetrics) -> None:
    for m in metrics:
        if not (np.isfinite(m.accuracy) and np.isfinite(m.loss)):
            logger.error(f"Non-finite metric in split {split} at iteration {iteration}: {m}")
            raise NonFiniteMetricError(f"split {split}, iteration {iteration}: non-finite metric {m}")


def _session(graph: Graph, config: RunConfig, seed) -> GnnSession:
    return GnnSession(graph, backbone=config.backbone, hidden_dim=config.hidden_dim,
                      dropout=config.dropout, learning_rate=config.learning_rate,
                      weight_decay=config.weight_decay, seed=seed)


def static_state(graph: Graph, sequences: EntropySequence, config: RunConfig,
                 rng: np.random.Generator) -> RewireState:
    """Fixed (k, d) for the static modes, clamped to each node's bounds."""
    n = graph.num_nodes
    k_upper, d_upper = state_bounds(graph, sequences, config.k_max)
    if config.mode == RunMode.FIXED_K:
        k = np.full(n, config.k, dtype=np.int64)
        d = np.full(n, config.d, dtype=np.int64)
    elif config.mode == RunMode.RANDOM_K:
        k = rng.integers(0, config.k_range + 1, size=n)
        d = rng.integers(0, config.k_range + 1, size=n)
    else:
        return RewireState.zeros(n)
    return RewireState(k=np.minimum(k, k_upper), d=np.minimum(d, d_upper))


def run_static_split(graph: Graph, sequences: Optional[EntropySequence], masks: SplitMask,
                     config: RunConfig, state: Optional[RewireState] = None) -> SplitResult:
    """
    Train once on a fixed graph; test accuracy is read at the best validation epoch.

    ``state`` is the run-wide (k, d) allocation; without one it is derived
    from the run seed, so every split of a run rewires identically.
    """
    gnn_seed = np.random.SeedSequence(masks.seed).spawn(3)[0]
    if sequences is None:
        state = RewireState.zeros(graph.num_nodes)
        working = graph
    else:
        if state is None:
            state = static_state(graph, sequences, config, np.random.default_rng(config.run_seed))
        working = apply_rewire(graph, state, sequences)

    session = _session(working, config, gnn_seed)
    homophily = safe_homophily(working)
    result = SplitResult(seed=masks.seed, test_accuracy=0.0, best_val_accuracy=-1.0,
                         best_iteration=0, best_graph=working)
    best_loss, bad = float("inf"), 0
    for epoch in range(1, config.static_epochs + 1):
        session.fit_epoch(masks.train)
        train_m, val_m, test_m = session.evaluate_split(masks)
        _check_finite(masks.seed, epoch, train_m, val_m, test_m)
        result.rows.append(SeriesRow(
            iteration=epoch, split=masks.seed, train_acc=train_m.accuracy, val_acc=val_m.accuracy,
            test_acc=test_m.accuracy, loss=train_m.loss,
            homophily=homophily if homophily is not None else float("nan"),
            mean_reward=0.0, mean_k=float(state.k.mean()), mean_d=float(state.d.mean()),
        ))
        if val_m.accuracy > result.best_val_accuracy:
            result.best_val_accuracy = val_m.accuracy
            result.test_accuracy = test_m.accuracy
            result.best_iteration = epoch
        if val_m.loss < best_loss:
            best_loss, bad = val_m.loss, 0
        else:
            bad += 1
        if bad >= config.static_patience:
            break

    logger.info(f"Split {masks.seed} ({config.mode.value}): test acc {result.test_accuracy:.4f} "
                f"at epoch {result.best_iteration}")
    return result


def restart_episode(env: RewireEnvironment, session: GnnSession, masks: SplitMask,
                    with_auc: bool = False) -> Tuple[RewireState, TrainMetrics]:
    """Reset the agent and point the GNN back at the original graph, returning its training metrics."""
    state = env.reset()
    session.with_graph(env.graph)
    return state, session.evaluate(masks.train, with_auc=with_auc)


def run_agent_split(graph: Graph, sequences: EntropySequence, masks: SplitMask,
                    config: RunConfig) -> SplitResult:
    """
    Joint loop for one split.

    Each iteration evaluates the GNN on the current graph without a
    backward pass, refines it for a few epochs only when training accuracy
    beats the running maximum, rewards the previous transition, takes one
    agent step and rebuilds the graph from the new state.
    """
    gnn_seed, policy_seed, action_seed = np.random.SeedSequence(masks.seed).spawn(3)
    session = _session(graph, config, gnn_seed)
    policy = init_policy(graph.num_nodes, max(config.k_max, 1), np.random.default_rng(policy_seed),
                         hidden_dim=config.ppo_hidden_dim, learning_rate=config.ppo_learning_rate)
    action_rng = np.random.default_rng(action_seed)
    env = RewireEnvironment(graph, sequences, k_max=config.k_max, horizon=config.episode_horizon,
                            allow_add=config.mode != RunMode.REMOVE_ONLY,
                            allow_remove=config.mode != RunMode.ADD_ONLY)
    params = RewardParams(lambda_r=config.lambda_r)
    ppo = config.ppo_config()
    refine = config.refine_config()
    use_auc = config.mode == RunMode.AUC_REWARD

    state = env.reset()
    current = graph
    buffer = RolloutBuffer()
    pending = None
    episode_done = False
    episode_rewards: List[float] = []
    max_acc = 0.0
    prev: Optional[TrainMetrics] = None
    result = SplitResult(seed=masks.seed, test_accuracy=0.0, best_val_accuracy=-1.0,
                         best_iteration=0, best_graph=graph)

    for t in range(config.iterations):
        metrics = session.evaluate(masks.train, with_auc=use_auc)
        _check_finite(masks.seed, t, metrics)
        if use_auc and not np.isfinite(metrics.auc):
            raise NonFiniteMetricError(f"split {masks.seed}, iteration {t}: AUC undefined on the training mask")
        if metrics.accuracy > max_acc:
            max_acc = metrics.accuracy
            history = session.train(masks, refine)
            result.refinement_iterations.append(t)
            result.refinement_epochs.append(history.epochs_run)

        if prev is None:
            step_reward = 0.0
        elif use_auc:
            step_reward = metrics.auc - prev.auc
        else:
            step_reward = reward(metrics, prev, params)
        prev = metrics

        if pending is not None:
            buffer.add(*pending, reward=step_reward, done=episode_done)
            episode_rewards.append(step_reward)

        train_m, val_m, test_m = session.evaluate_split(masks)
        _check_finite(masks.seed, t, train_m, val_m, test_m)
        homophily = safe_homophily(current)
        result.rows.append(SeriesRow(
            iteration=t, split=masks.seed, train_acc=train_m.accuracy, val_acc=val_m.accuracy,
            test_acc=test_m.accuracy, loss=train_m.loss,
            homophily=homophily if homophily is not None else float("nan"),
            mean_reward=float(np.mean(episode_rewards)) if episode_rewards else 0.0,
            mean_k=float(state.k.mean()), mean_d=float(state.d.mean()),
        ))
        if val_m.accuracy > result.best_val_accuracy:
            result.best_val_accuracy = val_m.accuracy
            result.test_accuracy = test_m.accuracy
            result.best_iteration = t
            result.best_graph = current
        result.trace.append(trace_row(t, step_reward, state, current))

        if episode_done:
            state, prev = restart_episode(env, session, masks, with_auc=use_auc)
            current = graph
            episode_rewards = []
        if len(buffer) >= ppo.rollout_length:
            _, last_value = head_log_probs(policy, state)
            policy, diagnostics = ppo_update(policy, buffer, ppo, last_value=last_value)
            buffer.clear()
            logger.debug(f"Split {masks.seed}, iteration {t}: PPO loss {diagnostics['loss']:.4f}")

        action, log_prob, value = sample_action(policy, state, action_rng)
        pending = (state, action, log_prob, value)
        state, current, episode_done = env.step(action)
        session.with_graph(current)

    logger.info(f"Split {masks.seed} ({config.mode.value}): test acc {result.test_accuracy:.4f} "
                f"at iteration {result.best_iteration}, {len(result.refinement_iterations)} refinements")
    return result


# ============================================================================
# RUNS
# ============================================================================

def _resolve_graph(config: RunConfig, graph: Optional[Graph]) -> Graph:
    if graph is not None:
        return graph
    if not config.dataset_path:
        raise OrchestratorError("no graph given and no dataset path configured")
    return load_dataset_dir(config.dataset_path)


def _run_splits(graph: Graph, config: RunConfig, split_fn, sequences) -> List[SplitResult]:
    masks = [stratified_split(graph, seed, small_class_policy=config.small_class_policy)
             for seed in config.split_seeds]
    with ThreadPoolExecutor(max_workers=min(config.threads, len(masks))) as pool:
        return list(pool.map(lambda m: split_fn(graph, sequences, m, config), masks))


def run(config: RunConfig, graph: Optional[Graph] = None,
        table: Optional[EntropyTable] = None) -> RunReport:
    """Execute every split of one configuration and collect the report."""
    started = time.time()
    graph = _resolve_graph(config, graph)
    logger.info(f"Run mode={config.mode.value} backbone={config.backbone} lambda={config.lam} "
                f"on N={graph.num_nodes}, |E|={graph.num_edges}, {len(config.split_seeds)} splits")

    if config.mode == RunMode.BASELINE:
        splits = _run_splits(graph, config, run_static_split, None)
    else:
        sequences = prepare_sequences(graph, config, table)
        if config.is_static:
            state = static_state(graph, sequences, config, np.random.default_rng(config.run_seed))
            split_fn = partial(run_static_split, state=state)
        else:
            split_fn = run_agent_split
        splits = _run_splits(graph, config, split_fn, sequences)

    report = RunReport(mode=config.mode.value, backbone=config.backbone, lam=config.lam,
                       dataset_path=config.dataset_path, original_graph=graph, splits=splits,
                       wall_clock_seconds=time.time() - started)
    logger.info(f"Mode {report.mode}: mean test acc {report.mean_test_accuracy:.4f} "
                f"+/- {report.std_test_accuracy:.4f} in {report.wall_clock_seconds:.1f}s")
    return report


def baseline(config: RunConfig, graph: Optional[Graph] = None) -> RunReport:
    """The chosen backbone on the original graph, same splits and budgets."""
    return run(config.model_copy(update={"mode": RunMode.BASELINE}), graph=graph)


def sweep(config: RunConfig, parameter: str, values: Sequence[float], graph: Optional[Graph] = None,
          table: Optional[EntropyTable] = None,
          out_dir: Optional[Union[str, Path]] = None) -> List[RunReport]:
    """
    Repeat ``run`` over a grid.

    ``lambda`` varies the structural entropy weight; ``k`` runs fixed-k with
    k = d = value.  With ``out_dir`` each report is emitted to its own
    sub-directory.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise OrchestratorError(f"unknown sweep parameter '{parameter}', expected one of {SWEEP_PARAMETERS}")
    graph = _resolve_graph(config, graph)
    reports = []
    for value in values:
        if parameter == "lambda":
            point = config.model_copy(update={"lam": float(value)})
        else:
            point = RunConfig(**{**config.model_dump(), "mode": RunMode.FIXED_K,
                                 "k": int(value), "d": int(value)})
        report = run(point, graph=graph, table=table)
        if out_dir is not None:
            emit_report(report, Path(out_dir) / f"{parameter}_{value}")
        reports.append(report)
    return reports
