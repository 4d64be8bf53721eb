"""Group expert-written issue statements by semantic similarity.

Two grouping methods over sentence embeddings of short issue statements: a
graph method (1-nearest-neighbor similarity graph, weakly connected
components, PageRank importance) and a cluster method (staged dimensionality
reduction plus density clustering), with an overlap metric to compare the
two. Built to support consolidation discussions in interdisciplinary
assessment teams.
"""

from .corpus import Corpus, Issue, canonical_text, load_corpus, synth_corpus, write_corpus
from .embeddings import (
    EmbeddingSet,
    embed_corpus,
    load_embeddings,
    provider_bow,
    provider_file,
    provider_http,
    save_embeddings,
)
from .similarity import SimilarityMatrix, cosine, knn, similarity_matrix
from .graph import (
    SimilarityGraph,
    build_1nn_graph,
    group_by_graph,
    pagerank,
    weakly_connected_components,
)
from .cluster import (
    NOISE,
    ClusterLabels,
    ReducedCoordinates,
    group_by_cluster,
    hdbscan,
    load_reduced,
    reduce_pca,
)
from .compare import OverlapReport, adjusted_rand_index, best_match_report, overlap
from .grouping import Group, Grouping, load_grouping, save_grouping

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "Issue",
    "canonical_text",
    "load_corpus",
    "synth_corpus",
    "write_corpus",
    "EmbeddingSet",
    "embed_corpus",
    "load_embeddings",
    "save_embeddings",
    "provider_bow",
    "provider_file",
    "provider_http",
    "SimilarityMatrix",
    "cosine",
    "knn",
    "similarity_matrix",
    "SimilarityGraph",
    "build_1nn_graph",
    "weakly_connected_components",
    "pagerank",
    "group_by_graph",
    "NOISE",
    "ClusterLabels",
    "ReducedCoordinates",
    "reduce_pca",
    "load_reduced",
    "hdbscan",
    "group_by_cluster",
    "OverlapReport",
    "overlap",
    "best_match_report",
    "adjusted_rand_index",
    "Group",
    "Grouping",
    "load_grouping",
    "save_grouping",
    "__version__",
]
