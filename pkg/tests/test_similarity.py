from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from issuegroups.embeddings import EmbeddingSet, embed_corpus, provider_bow
from issuegroups.similarity import cosine, knn, matrix_csv, similarity_matrix

from conftest import random_unit_vectors


def brute_cosine(a, b):
    """Independent scalar-loop cosine used as the oracle."""
    dot = math.fsum(x * y for x, y in zip(a, b))
    na = math.sqrt(math.fsum(x * x for x in a))
    nb = math.sqrt(math.fsum(y * y for y in b))
    return dot / (na * nb)


# --- cosine kernel ---


def test_cosine_self_is_one():
    v = np.array([0.3, -2.0, 5.5])
    assert cosine(v, v) == pytest.approx(1.0, abs=1e-12)


def test_cosine_orthogonal_is_zero():
    assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0


def test_cosine_hand_value():
    # (1,1)·(1,0) / (sqrt(2)*1) = 1/sqrt(2)
    assert cosine(np.array([1.0, 1.0]), np.array([1.0, 0.0])) == pytest.approx(
        0.7071067811865475, abs=1e-15
    )


def test_cosine_rejects_dim_mismatch():
    with pytest.raises(ValueError):
        cosine(np.array([1.0, 2.0]), np.array([1.0, 2.0, 3.0]))


def test_cosine_rejects_zero_vector():
    with pytest.raises(ValueError):
        cosine(np.zeros(3), np.ones(3))


finite_vec = st.lists(
    st.floats(min_value=-100, max_value=100, allow_nan=False), min_size=2, max_size=8
)


@settings(max_examples=100, deadline=None)
@given(finite_vec, finite_vec, st.floats(min_value=1e-3, max_value=1e3))
def test_cosine_symmetry_and_scale_invariance(a, b, scale):
    size = min(len(a), len(b))
    va = np.array(a[:size])
    vb = np.array(b[:size])
    if np.linalg.norm(va) == 0 or np.linalg.norm(vb) == 0:
        return
    assert abs(cosine(va, vb) - cosine(vb, va)) <= 1e-12
    assert abs(cosine(scale * va, vb) - cosine(va, vb)) <= 1e-12
    assert -1.0 - 1e-12 <= cosine(va, vb) <= 1.0 + 1e-12


# --- similarity matrix ---


def _set_from_array(vectors: np.ndarray) -> EmbeddingSet:
    return EmbeddingSet("test", vectors.shape[1], {f"i{k:03d}": v for k, v in enumerate(vectors)})


def test_matrix_invariants_and_brute_force_equality():
    rng = np.random.default_rng(11)
    vectors = rng.normal(size=(20, 10))
    matrix = similarity_matrix(_set_from_array(vectors))
    values = matrix.values
    assert np.max(np.abs(values - values.T)) <= 1e-12
    assert np.max(np.abs(np.diag(values) - 1.0)) <= 1e-12
    assert np.all(values <= 1.0 + 1e-12) and np.all(values >= -1.0 - 1e-12)
    for i in range(20):
        for j in range(20):
            assert values[i, j] == pytest.approx(brute_cosine(vectors[i], vectors[j]), abs=1e-12)


def test_matrix_id_order_matches_corpus(tiny_corpus):
    embeddings = embed_corpus(tiny_corpus, provider_bow(dim=32, seed=0))
    matrix = similarity_matrix(embeddings)
    assert matrix.ids == tiny_corpus.ids()


def test_matrix_requires_two_vectors():
    with pytest.raises(ValueError):
        similarity_matrix(EmbeddingSet("m", 2, {"a": [1.0, 0.0]}))


# --- knn ---


def knn_oracle(ids, vectors, k):
    """Brute force: sort all other ids by (-cosine, id)."""
    out = {}
    for i, a in enumerate(ids):
        scored = [
            (brute_cosine(vectors[i], vectors[j]), ids[j]) for j in range(len(ids)) if j != i
        ]
        scored.sort(key=lambda t: (-t[0], t[1]))
        out[a] = [s[1] for s in scored[:k]]
    return out


def test_knn_one_nearest_hand_case():
    vectors = np.array([[1.0, 0.0], [0.9, 0.1], [0.0, 1.0]])
    ids = ["A", "B", "C"]
    matrix = similarity_matrix(EmbeddingSet("m", 2, dict(zip(ids, vectors))))
    result = knn(matrix, 1)
    assert result["A"][0][0] == "B"
    assert result["B"][0][0] == "A"
    assert result["C"][0][0] == "B"
    assert knn_oracle(ids, vectors, 1) == {i: [result[i][0][0]] for i in ids}


def test_knn_full_lists_are_permutations():
    rng = np.random.default_rng(3)
    vectors = rng.normal(size=(7, 5))
    embedding_set = _set_from_array(vectors)
    matrix = similarity_matrix(embedding_set)
    result = knn(matrix, 6)
    all_ids = set(embedding_set.ids())
    for issue_id, neighbors in result.items():
        assert {n for n, _ in neighbors} == all_ids - {issue_id}


def test_knn_matches_oracle_on_random_instances():
    rng = np.random.default_rng(17)
    for _ in range(10):
        n = int(rng.integers(4, 15))
        vectors = random_unit_vectors(rng, n, 6)
        embedding_set = _set_from_array(vectors)
        matrix = similarity_matrix(embedding_set)
        ids = embedding_set.ids()
        for k in (1, n - 1):
            got = {i: [x for x, _ in neighbors] for i, neighbors in knn(matrix, k).items()}
            assert got == knn_oracle(ids, vectors, k)


def test_knn_identical_vectors_tie_break_by_id():
    vectors = {"b": [1.0, 0.0], "a": [1.0, 0.0], "c": [1.0, 0.0]}
    matrix = similarity_matrix(EmbeddingSet("m", 2, vectors))
    result = knn(matrix, 1)
    assert result["b"][0][0] == "a"
    assert result["a"][0][0] == "b"
    assert result["c"][0][0] == "a"


def test_knn_identical_pair_selects_each_other():
    vectors = {"a": [1.0, 0.0], "b": [1.0, 0.0], "c": [0.0, 1.0]}
    matrix = similarity_matrix(EmbeddingSet("m", 2, vectors))
    result = knn(matrix, 1)
    assert result["a"][0] == ("b", pytest.approx(1.0))
    assert result["b"][0] == ("a", pytest.approx(1.0))


def test_knn_rejects_bad_k():
    matrix = similarity_matrix(EmbeddingSet("m", 2, {"a": [1, 0], "b": [0, 1]}))
    for k in (0, 2, 5):
        with pytest.raises(ValueError):
            knn(matrix, k)


def test_knn_invariant_under_input_permutation():
    rng = np.random.default_rng(23)
    vectors = random_unit_vectors(rng, 9, 4)
    ids = [f"n{i}" for i in range(9)]
    matrix = similarity_matrix(EmbeddingSet("m", 4, dict(zip(ids, vectors))))
    result = {i: [x for x, _ in l] for i, l in knn(matrix, 2).items()}
    perm = list(rng.permutation(9))
    shuffled = EmbeddingSet("m", 4, {ids[p]: vectors[p] for p in perm})
    result_shuffled = {
        i: [x for x, _ in l] for i, l in knn(similarity_matrix(shuffled), 2).items()
    }
    assert result == result_shuffled


def test_matrix_csv_dump_round_trips_values():
    matrix = similarity_matrix(EmbeddingSet("m", 2, {"a": [1.0, 0.0], "b": [0.5, 0.5]}))
    text = matrix_csv(matrix)
    lines = text.strip().split("\n")
    assert lines[0] == ",a,b"
    parsed = [float(x) for x in lines[1].split(",")[1:]]
    assert parsed == [1.0, matrix.sim("a", "b")]
