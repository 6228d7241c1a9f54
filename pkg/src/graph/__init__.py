"""Graph representation, ingestion, splits and homophily analytics."""

from .models import Graph, GraphError, SplitMask
from .analytics import SplitError, homophily_ratio, stratified_split
from .loader import (GraphLoadError, export_content, export_edgelist, load_dataset_dir,
                     load_graph, read_edgelist)

__all__ = [
    'Graph', 'GraphError', 'SplitMask', 'SplitError', 'GraphLoadError',
    'homophily_ratio', 'stratified_split', 'load_graph', 'load_dataset_dir',
    'export_edgelist', 'export_content', 'read_edgelist',
]
