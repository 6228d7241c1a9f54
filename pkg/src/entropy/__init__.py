"""Node relative entropy and ranked entropy sequences."""

from .embedding import EmbeddingConfig, EntropyError, embed
from .relative_entropy import (DegreeProfile, EntropyTable, compute_entropy, degree_profile,
                               feature_entropy, relative_entropy, structural_entropy)
from .sequences import EntropySequence, build_sequences, shuffle_sequences
from .blockwise import blockwise_sequences
from .table_io import EntropyTableFormatError, export_matrix_csv, load_table, save_table

__all__ = [
    'EmbeddingConfig', 'EntropyError', 'embed', 'DegreeProfile', 'EntropyTable',
    'compute_entropy', 'degree_profile', 'feature_entropy', 'relative_entropy',
    'structural_entropy', 'EntropySequence', 'build_sequences', 'shuffle_sequences',
    'blockwise_sequences', 'EntropyTableFormatError', 'export_matrix_csv', 'load_table',
    'save_table',
]
