"""
Dataset ingestion and export for EntroWire.

Content files hold one whitespace-separated record per node
("node_id f_1 ... f_d label"); edge files hold one "u v" pair per line with
'#' comment lines allowed.  Graphs are undirected: reversed and duplicate
edge lines collapse, self-loop lines are dropped and counted.
"""

import logging
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from .models import Graph, GraphError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

CONTENT_PATTERNS = ("*.content",)
EDGE_PATTERNS = ("*.cites", "*.edges")


class GraphLoadError(GraphError):
    """Custom exception for dataset loading errors."""
    pass


def _read_lines(path: Path) -> List[str]:
    if not path.exists():
        raise GraphLoadError(f"File not found: {path}")
    return path.read_text().splitlines()


def _parse_content(path: Path) -> Tuple[List[str], np.ndarray, List[str]]:
    node_ids: List[str] = []
    rows: List[List[str]] = []
    label_tokens: List[str] = []
    arity = None
    seen: Dict[str, int] = {}

    for line_no, line in enumerate(_read_lines(path), 1):
        tokens = line.split()
        if not tokens:
            continue
        if len(tokens) < 3:
            raise GraphLoadError(f"{path}:{line_no}: expected 'node_id f_1 ... f_d label'")
        if arity is None:
            arity = len(tokens) - 2
        elif len(tokens) - 2 != arity:
            raise GraphLoadError(
                f"{path}:{line_no}: inconsistent feature arity {len(tokens) - 2}, expected {arity}")
        node_id = tokens[0]
        if node_id in seen:
            raise GraphLoadError(f"{path}:{line_no}: duplicate node id '{node_id}'")
        seen[node_id] = len(node_ids)
        node_ids.append(node_id)
        rows.append(tokens[1:-1])
        label_tokens.append(tokens[-1])

    if not node_ids:
        raise GraphLoadError(f"{path}: no node records")

    try:
        features = np.array(rows, dtype=np.float64)
    except ValueError as e:
        raise GraphLoadError(f"{path}: non-numeric feature value ({e})")
    return node_ids, features, label_tokens


def _parse_edges(path: Path, index: Dict[str, int]) -> List[Tuple[int, int]]:
    pairs: List[Tuple[int, int]] = []
    for line_no, line in enumerate(_read_lines(path), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.split()
        if len(tokens) < 2:
            raise GraphLoadError(f"{path}:{line_no}: expected 'u v'")
        u, v = tokens[0], tokens[1]
        for endpoint in (u, v):
            if endpoint not in index:
                raise GraphLoadError(f"{path}:{line_no}: edge references unknown node '{endpoint}'")
        pairs.append((index[u], index[v]))
    return pairs


def load_graph(content_path: PathLike, edges_path: PathLike) -> Graph:
    """
    Load a node-attributed graph from a content file and an edge file.

    Node ids are remapped to 0..N-1 in order of first appearance in the
    content file; label tokens map to dense class ids in lexicographic order.

    Args:
        content_path: path to the node content file
        edges_path: path to the edge list file

    Returns:
        Graph with ``metadata['self_loops_dropped']`` set
    """
    content_path, edges_path = Path(content_path), Path(edges_path)
    node_ids, features, label_tokens = _parse_content(content_path)
    index = {node_id: i for i, node_id in enumerate(node_ids)}
    pairs = _parse_edges(edges_path, index)

    class_names = sorted(set(label_tokens))
    class_index = {name: i for i, name in enumerate(class_names)}
    labels = np.array([class_index[t] for t in label_tokens], dtype=np.int64)

    graph = Graph.build(features, labels, pairs, node_ids=node_ids, class_names=class_names,
                        metadata={"source": str(content_path.parent)})
    dropped = graph.metadata["self_loops_dropped"]
    if dropped:
        logger.warning(f"Dropped {dropped} self-loop line(s) from {edges_path}")
    if graph.num_classes < 2:
        logger.warning(f"{content_path} declares a single class")

    logger.info(f"Loaded graph from {content_path.parent}: N={graph.num_nodes}, "
                f"|E|={graph.num_edges}, d={graph.num_features}, C={graph.num_classes}")
    return graph


def _find_one(directory: Path, patterns: Tuple[str, ...]) -> Path:
    for pattern in patterns:
        matches = sorted(directory.glob(pattern))
        if matches:
            return matches[0]
    raise GraphLoadError(f"No {' or '.join(patterns)} file found in {directory}")


def load_dataset_dir(directory: PathLike) -> Graph:
    """Load a dataset directory holding one content file and one edge file."""
    directory = Path(directory)
    if not directory.is_dir():
        raise GraphLoadError(f"Dataset directory not found: {directory}")
    content = _find_one(directory, CONTENT_PATTERNS)
    edges = _find_one(directory, EDGE_PATTERNS)
    return load_graph(content, edges)


def export_edgelist(graph: Graph, path: PathLike) -> None:
    """Write one "u v" line per edge, u < v, sorted by (u, v)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{u} {v}\n" for u, v in graph.edges.tolist()))
    logger.debug(f"Exported {graph.num_edges} edges to {path}")


def export_content(graph: Graph, path: PathLike) -> None:
    """Write "i f_1 ... f_d label" lines using dense node ids."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # zero-padded so lexicographic reload keeps the class order
    names = graph.class_names or tuple(f"c{c:04d}" for c in range(graph.num_classes))
    lines = []
    for i in range(graph.num_nodes):
        values = " ".join(repr(float(x)) for x in graph.features[i])
        lines.append(f"{i} {values} {names[graph.labels[i]]}\n")
    path.write_text("".join(lines))


def read_edgelist(path: PathLike) -> np.ndarray:
    """Read integer "u v" pairs, skipping blank and '#' lines."""
    pairs = []
    for line_no, line in enumerate(_read_lines(Path(path)), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.split()
        try:
            pairs.append((int(tokens[0]), int(tokens[1])))
        except (IndexError, ValueError):
            raise GraphLoadError(f"{path}:{line_no}: expected integer 'u v'")
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)
