"""Embedding vectors per issue, the providers that produce them, and persistence.

Three interchangeable providers cover the practical setups: a deterministic
hashed bag-of-words embedder (no model required), a file of precomputed
vectors, and an HTTP client for a sentence-encoder service. Vectors are kept
exactly as the provider returned them; cosine similarity normalizes later.
"""
from __future__ import annotations

import hashlib
import json
import re
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from .corpus import Corpus, canonical_text
from .errors import FormatError, MissingEmbeddingError, ProviderError, ValidationError
from .ioutils import atomic_write_text

DEFAULT_BOW_DIM = 768
_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass
class EmbeddingSet:
    """One embedding vector per issue id, all with the same dimension."""

    model_name: str
    dim: int
    vectors: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValidationError(f"embedding dim must be positive, got {self.dim}")
        converted: dict[str, np.ndarray] = {}
        for issue_id, vec in self.vectors.items():
            arr = np.asarray(vec, dtype=np.float64)
            if arr.ndim != 1 or arr.shape[0] != self.dim:
                raise ValidationError(
                    f"vector for id {issue_id!r} has shape {arr.shape}, expected ({self.dim},)"
                )
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"vector for id {issue_id!r} contains NaN/Inf")
            if not np.any(arr):
                raise ValidationError(f"vector for id {issue_id!r} is the zero vector")
            converted[issue_id] = arr
        self.vectors = converted

    def __len__(self) -> int:
        return len(self.vectors)

    def ids(self) -> list[str]:
        return list(self.vectors.keys())

    def matrix(self) -> np.ndarray:
        """Vectors stacked in id order, shape (n, dim)."""
        return np.stack([self.vectors[i] for i in self.vectors])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingSet):
            return NotImplemented
        return (
            self.model_name == other.model_name
            and self.dim == other.dim
            and list(self.vectors) == list(other.vectors)
            and all(np.array_equal(self.vectors[k], other.vectors[k]) for k in self.vectors)
        )


@runtime_checkable
class EmbeddingProvider(Protocol):
    """Source of embedding vectors for (id, text) pairs."""

    model_name: str
    batch_size: int

    def embed_batch(self, ids: Sequence[str], texts: Sequence[str]) -> list[np.ndarray]:
        ...


class BowProvider:
    """Deterministic hashed bag-of-words embedder.

    Tokens are lowercased alphanumeric runs; each token lands in a seeded,
    signed hash bucket and counts accumulate before L2 normalization, so
    identical texts always produce the same unit vector in any process.
    """

    def __init__(self, dim: int = DEFAULT_BOW_DIM, seed: int = 0):
        if dim < 8:
            raise ValueError(f"bow dim must be >= 8, got {dim}")
        if seed < 0:
            raise ValueError("seed must be a non-negative integer")
        self.dim = dim
        self.seed = seed
        self.model_name = f"hashed-bow-d{dim}-s{seed}"
        self.batch_size = 1024
        self._key = int(seed).to_bytes(8, "little")

    def _token_bucket(self, token: str) -> tuple[int, float]:
        digest = hashlib.blake2b(token.encode("utf-8"), key=self._key, digest_size=9).digest()
        bucket = int.from_bytes(digest[:8], "little") % self.dim
        sign = 1.0 if digest[8] & 1 else -1.0
        return bucket, sign

    def embed_one(self, issue_id: str, text: str) -> np.ndarray:
        tokens = _TOKEN_RE.findall(text.lower())
        if not tokens:
            raise ValidationError(
                f"id {issue_id!r}: text has no tokens and would embed to the zero vector"
            )
        vec = np.zeros(self.dim, dtype=np.float64)
        for token in tokens:
            bucket, sign = self._token_bucket(token)
            vec[bucket] += sign
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise ValidationError(f"id {issue_id!r}: token signs cancelled to the zero vector")
        return vec / norm

    def embed_batch(self, ids: Sequence[str], texts: Sequence[str]) -> list[np.ndarray]:
        return [self.embed_one(i, t) for i, t in zip(ids, texts)]


class FileProvider:
    """Serves precomputed vectors from an embeddings JSON file, keyed by id."""

    def __init__(self, path: str | Path):
        self._path = str(path)
        self._set = load_embeddings(path)
        self.model_name = self._set.model_name
        self.dim = self._set.dim
        self.batch_size = 4096

    def embed_batch(self, ids: Sequence[str], texts: Sequence[str]) -> list[np.ndarray]:
        out = []
        for issue_id in ids:
            try:
                out.append(self._set.vectors[issue_id])
            except KeyError:
                raise MissingEmbeddingError(
                    f"no stored embedding for id {issue_id!r} in {self._path}"
                ) from None
        return out


class HttpProvider:
    """Client for an embedding HTTP service speaking the POST /embed protocol.

    Texts go out in batches; a failed batch is retried once before raising a
    ProviderError that carries the HTTP status and a body excerpt. Response
    dim and model_name must stay constant across batches.
    """

    def __init__(
        self,
        base_url: str,
        model_name: str = "",
        timeout: float = 30.0,
        batch_size: int = 32,
    ):
        if batch_size < 1:
            raise ValueError("batch_size must be positive")
        self.base_url = base_url.rstrip("/")
        self.model_name = model_name
        self.timeout = timeout
        self.batch_size = batch_size
        self._dim: int | None = None
        self._lock = threading.Lock()  # guards dim/model_name drift checks

    def _post(self, texts: Sequence[str]) -> dict:
        payload: dict = {"texts": list(texts)}
        if self.model_name:
            payload["model_name"] = self.model_name
        request = urllib.request.Request(
            self.base_url + "/embed",
            data=json.dumps(payload).encode("utf-8"),
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        with urllib.request.urlopen(request, timeout=self.timeout) as response:
            body = response.read().decode("utf-8")
            return json.loads(body)

    def embed_batch(self, ids: Sequence[str], texts: Sequence[str]) -> list[np.ndarray]:
        batch_label = f"ids [{ids[0]!r}..{ids[-1]!r}]" if ids else "empty batch"
        last_error = ""
        for _attempt in range(2):
            try:
                data = self._post(texts)
            except urllib.error.HTTPError as exc:
                excerpt = exc.read().decode("utf-8", errors="replace")[:200]
                last_error = f"HTTP {exc.code}: {excerpt}"
                continue
            except (urllib.error.URLError, TimeoutError, OSError) as exc:
                last_error = f"request failed: {exc}"
                continue
            except json.JSONDecodeError as exc:
                last_error = f"malformed JSON response: {exc}"
                continue
            return self._parse_response(data, ids, texts)
        raise ProviderError(f"embed batch for {batch_label} failed after retry: {last_error}")

    def _parse_response(
        self, data: dict, ids: Sequence[str], texts: Sequence[str]
    ) -> list[np.ndarray]:
        batch_label = f"ids [{ids[0]!r}..{ids[-1]!r}]" if ids else "empty batch"
        if not isinstance(data, dict) or "embeddings" not in data or "dim" not in data:
            raise ProviderError(f"batch for {batch_label}: response missing embeddings/dim")
        vectors = data["embeddings"]
        dim = int(data["dim"])
        if len(vectors) != len(texts):
            raise ProviderError(
                f"batch for {batch_label}: got {len(vectors)} vectors for {len(texts)} texts"
            )
        with self._lock:
            if self._dim is None:
                self._dim = dim
            elif dim != self._dim:
                raise ProviderError(
                    f"batch for {batch_label}: dim drifted from {self._dim} to {dim} between batches"
                )
            served_model = str(data.get("model_name", ""))
            if served_model:
                if self.model_name and served_model != self.model_name:
                    raise ProviderError(
                        f"batch for {batch_label}: service model {served_model!r} "
                        f"!= requested {self.model_name!r}"
                    )
                self.model_name = served_model
        return [np.asarray(v, dtype=np.float64) for v in vectors]


def provider_bow(dim: int = DEFAULT_BOW_DIM, seed: int = 0) -> BowProvider:
    return BowProvider(dim=dim, seed=seed)


def provider_file(path: str | Path) -> FileProvider:
    return FileProvider(path)


def provider_http(
    base_url: str, model_name: str = "", timeout: float = 30.0, batch_size: int = 32
) -> HttpProvider:
    return HttpProvider(base_url, model_name=model_name, timeout=timeout, batch_size=batch_size)


def embed_corpus(corpus: Corpus, provider: EmbeddingProvider) -> EmbeddingSet:
    """Embed every issue's canonical text; one vector per id, constant dim."""
    if len(corpus) == 0:
        raise ValueError("cannot embed an empty corpus")
    ids = corpus.ids()
    texts = [canonical_text(issue) for issue in corpus]
    vectors: dict[str, np.ndarray] = {}
    step = max(1, int(provider.batch_size))
    for start in range(0, len(ids), step):
        batch_ids = ids[start : start + step]
        batch_texts = texts[start : start + step]
        batch_vectors = provider.embed_batch(batch_ids, batch_texts)
        if len(batch_vectors) != len(batch_ids):
            raise ProviderError(
                f"provider returned {len(batch_vectors)} vectors for {len(batch_ids)} issues "
                f"(batch starting at {batch_ids[0]!r})"
            )
        for issue_id, vec in zip(batch_ids, batch_vectors):
            vectors[issue_id] = vec
    dims = {v.shape[-1] if hasattr(v, "shape") else len(v) for v in vectors.values()}
    if len(dims) != 1:
        raise ValidationError(f"provider returned mixed dimensions {sorted(dims)}")
    return EmbeddingSet(model_name=provider.model_name, dim=dims.pop(), vectors=vectors)


def save_embeddings(embedding_set: EmbeddingSet, path: str | Path) -> None:
    """Write embeddings JSON; float values round-trip exactly."""
    payload = {
        "model_name": embedding_set.model_name,
        "dim": embedding_set.dim,
        "vectors": {i: [float(x) for x in v] for i, v in embedding_set.vectors.items()},
    }
    atomic_write_text(path, json.dumps(payload, indent=2) + "\n")


def load_embeddings(path: str | Path) -> EmbeddingSet:
    """Inverse of save_embeddings; FormatError on shape/dim problems."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise FormatError(f"{path}: expected a top-level object")
    for key in ("model_name", "dim", "vectors"):
        if key not in data:
            raise FormatError(f"{path}: missing required key '{key}'")
    dim = data["dim"]
    if not isinstance(dim, int) or dim < 1:
        raise FormatError(f"{path}: dim must be a positive integer, got {dim!r}")
    vectors = data["vectors"]
    if not isinstance(vectors, dict):
        raise FormatError(f"{path}: 'vectors' must be an object keyed by issue id")
    for issue_id, values in vectors.items():
        if not isinstance(values, list) or len(values) != dim:
            raise FormatError(
                f"{path}: vector for id {issue_id!r} has length "
                f"{len(values) if isinstance(values, list) else 'n/a'}, expected dim {dim}"
            )
    try:
        return EmbeddingSet(model_name=str(data["model_name"]), dim=dim, vectors=vectors)
    except ValidationError as exc:
        raise FormatError(f"{path}: {exc}") from exc
