"""Issue corpora: loading, validation, writing, canonical text, synthetic generation.

An issue is a single concern written down by an expert working group. Corpora
come from CSV/JSON files or from the synthetic generator used for experiments.
"""
from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from .errors import SchemaError, ValidationError
from .ioutils import atomic_write_text

CSV_COLUMNS = ("id", "working_group", "title", "description")

_SENTENCE_END = (".", "!", "?")


@dataclass(frozen=True)
class Issue:
    """One issue: id, working group label, short title, optional description."""

    id: str
    working_group: str
    title: str
    description: str = ""

    def __post_init__(self) -> None:
        for name in ("id", "working_group", "title", "description"):
            value = getattr(self, name)
            if not isinstance(value, str):
                raise ValidationError(f"issue field '{name}' must be a string, got {type(value).__name__}")
            object.__setattr__(self, name, value.strip())
        if not self.id:
            raise ValidationError("issue id must be a non-empty token")
        if any(ch.isspace() for ch in self.id):
            raise ValidationError(f"issue id {self.id!r} must not contain whitespace")
        if not self.working_group:
            raise ValidationError(f"issue {self.id!r}: working_group must be non-empty")
        if not self.title:
            raise ValidationError(f"issue {self.id!r}: title must be non-empty")


@dataclass(frozen=True)
class Corpus:
    """Ordered collection of issues with unique ids."""

    issues: tuple[Issue, ...]
    source: str = "unknown"

    def __post_init__(self) -> None:
        object.__setattr__(self, "issues", tuple(self.issues))
        seen: set[str] = set()
        for issue in self.issues:
            if issue.id in seen:
                raise ValidationError(f"duplicate issue id {issue.id!r}")
            seen.add(issue.id)

    def __len__(self) -> int:
        return len(self.issues)

    def __iter__(self) -> Iterator[Issue]:
        return iter(self.issues)

    def ids(self) -> list[str]:
        return [issue.id for issue in self.issues]

    def get(self, issue_id: str) -> Issue:
        for issue in self.issues:
            if issue.id == issue_id:
                return issue
        raise KeyError(issue_id)

    def working_groups(self) -> dict[str, str]:
        """Map issue id -> working group label."""
        return {issue.id: issue.working_group for issue in self.issues}


def canonical_text(issue: Issue) -> str:
    """Text that gets embedded: title plus description joined at a sentence boundary.

    The separator is ". " unless the title already ends a sentence, so the
    encoder always sees exactly one boundary between the two parts.
    """
    if not issue.description:
        return issue.title
    sep = " " if issue.title.endswith(_SENTENCE_END) else ". "
    return issue.title + sep + issue.description


def load_corpus(path: str | Path, fmt: str | None = None) -> Corpus:
    """Load a corpus from a CSV or JSON file, preserving file order.

    ``fmt`` is "csv" or "json"; when None it is inferred from the suffix.
    Raises SchemaError for missing columns/fields, ValidationError for bad
    issues (empty title, duplicate id), OSError for unreadable files.
    """
    path = Path(path)
    fmt = fmt or infer_format(path)
    if fmt == "csv":
        return _load_csv(path)
    if fmt == "json":
        return _load_json(path)
    raise ValueError(f"unknown corpus format {fmt!r} (expected 'csv' or 'json')")


def infer_format(path: str | Path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix == ".json":
        return "json"
    raise ValueError(f"cannot infer corpus format from {str(path)!r}; pass fmt explicitly")


def _load_csv(path: Path) -> Corpus:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty CSV file, expected header {','.join(CSV_COLUMNS)}")
        for column in CSV_COLUMNS:
            if column not in reader.fieldnames:
                raise SchemaError(f"{path}: missing required column '{column}'")
        issues = []
        for row in reader:
            issues.append(Issue(*((row.get(col) or "") for col in CSV_COLUMNS)))
    return Corpus(tuple(issues), source=str(path))


def _load_json(path: Path) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict) or not isinstance(data.get("issues"), list):
        raise SchemaError(f"{path}: expected a top-level object with an 'issues' list")
    issues = []
    for i, item in enumerate(data["issues"]):
        if not isinstance(item, dict):
            raise SchemaError(f"{path}: issues[{i}] is not an object")
        for key in CSV_COLUMNS:
            if key not in item:
                raise SchemaError(f"{path}: issues[{i}] missing required field '{key}'")
        issues.append(Issue(*(item[col] for col in CSV_COLUMNS)))
    return Corpus(tuple(issues), source=str(path))


def write_corpus(corpus: Corpus, path: str | Path, fmt: str | None = None) -> None:
    """Write a corpus as CSV (RFC-4180) or JSON; inverse of load_corpus."""
    path = Path(path)
    fmt = fmt or infer_format(path)
    if fmt == "csv":
        import io

        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for issue in corpus:
            writer.writerow([issue.id, issue.working_group, issue.title, issue.description])
        atomic_write_text(path, buf.getvalue())
    elif fmt == "json":
        payload = {
            "issues": [
                {
                    "id": issue.id,
                    "working_group": issue.working_group,
                    "title": issue.title,
                    "description": issue.description,
                }
                for issue in corpus
            ]
        }
        atomic_write_text(path, json.dumps(payload, indent=2) + "\n")
    else:
        raise ValueError(f"unknown corpus format {fmt!r} (expected 'csv' or 'json')")


_SYLLABLES = (
    "ba", "ce", "di", "fo", "gu", "ha", "je", "ki", "lo", "mu",
    "na", "pe", "qi", "ro", "su", "ta", "ve", "wi", "xo", "zu",
)


class _WordFactory:
    """Deterministic supply of distinct pronounceable nonsense words."""

    def __init__(self, rng: random.Random):
        self._rng = rng
        self._seen: set[str] = set()

    def word(self) -> str:
        while True:
            w = "".join(self._rng.choice(_SYLLABLES) for _ in range(3))
            if w not in self._seen:
                self._seen.add(w)
                return w

    def words(self, n: int) -> list[str]:
        return [self.word() for _ in range(n)]


def synth_corpus(
    n_topics: int,
    sizes: list[int],
    vocab_overlap: float = 0.1,
    seed: int = 0,
) -> tuple[Corpus, dict[str, int]]:
    """Generate a corpus with planted topics; returns (corpus, id -> topic index).

    Each topic has a small core vocabulary shared by all of its issues plus
    per-issue specific words; the first issue of a topic states only the core
    theme, the rest add specifics. ``vocab_overlap`` is the probability that a
    specific-word slot is filled from a pool shared across all topics instead.
    Deterministic for fixed arguments.
    """
    if n_topics < 1:
        raise ValueError("n_topics must be >= 1")
    if len(sizes) != n_topics:
        raise ValueError(f"expected {n_topics} sizes, got {len(sizes)}")
    if any(int(s) < 1 for s in sizes):
        raise ValueError("every topic size must be a positive integer")
    if not 0.0 <= vocab_overlap <= 1.0:
        raise ValueError("vocab_overlap must be in [0, 1]")
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")

    rng = random.Random(seed)
    factory = _WordFactory(rng)
    shared_pool = factory.words(40)

    issues: list[Issue] = []
    labels: dict[str, int] = {}
    for t in range(n_topics):
        core = factory.words(10)
        wg = f"wg{t}"
        for j in range(int(sizes[t])):
            issue_id = f"T{t}-{j:02d}"
            if j == 0:
                # Theme statement: core vocabulary only.
                title = " ".join(core[:3])
                description = " ".join(core[3:])
            else:
                n_specific = rng.randint(8, 12)
                specifics = [
                    rng.choice(shared_pool) if rng.random() < vocab_overlap else factory.word()
                    for _ in range(n_specific)
                ]
                title = " ".join(specifics[:2])
                body = core * 2 + specifics[2:]
                rng.shuffle(body)
                description = " ".join(body)
            issues.append(Issue(issue_id, wg, title, description))
            labels[issue_id] = t
    return Corpus(tuple(issues), source="synthetic"), labels
