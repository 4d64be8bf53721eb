"""Cosine similarity kernel, dense pairwise matrix, and k-nearest-neighbor lists."""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingSet


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two nonzero vectors of equal dimension."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ValueError("cosine similarity is undefined for zero-norm vectors")
    return float(np.dot(a, b) / (norm_a * norm_b))


@dataclass
class SimilarityMatrix:
    """All pairwise cosine similarities; ids index rows/columns in corpus order."""

    ids: list[str]
    values: np.ndarray
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._index = {issue_id: i for i, issue_id in enumerate(self.ids)}

    def __len__(self) -> int:
        return len(self.ids)

    def sim(self, id_a: str, id_b: str) -> float:
        return float(self.values[self._index[id_a], self._index[id_b]])


def similarity_matrix(embedding_set: EmbeddingSet) -> SimilarityMatrix:
    """Dense n x n cosine matrix over an embedding set (n >= 2)."""
    if len(embedding_set) < 2:
        raise ValueError("similarity matrix needs at least 2 embeddings")
    ids = embedding_set.ids()
    stacked = embedding_set.matrix()
    norms = np.linalg.norm(stacked, axis=1, keepdims=True)
    unit = stacked / norms
    return SimilarityMatrix(ids=ids, values=unit @ unit.T)


def knn(matrix: SimilarityMatrix, k: int) -> dict[str, list[tuple[str, float]]]:
    """For each id, the k most similar other ids, descending.

    Ties break by ascending id so the result is stable under permutation of
    the input corpus.
    """
    n = len(matrix)
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    ids = matrix.ids
    values = matrix.values
    result: dict[str, list[tuple[str, float]]] = {}
    for i, issue_id in enumerate(ids):
        order = sorted(
            (j for j in range(n) if j != i),
            key=lambda j: (-values[i, j], ids[j]),
        )
        result[issue_id] = [(ids[j], float(values[i, j])) for j in order[:k]]
    return result


def matrix_csv(matrix: SimilarityMatrix) -> str:
    """Full-precision CSV dump with a header row/column of ids."""
    buf = io.StringIO()
    buf.write("," + ",".join(matrix.ids) + "\n")
    for i, issue_id in enumerate(matrix.ids):
        row = ",".join(repr(float(v)) for v in matrix.values[i])
        buf.write(f"{issue_id},{row}\n")
    return buf.getvalue()
