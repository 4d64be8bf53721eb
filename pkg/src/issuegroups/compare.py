"""Comparing groupings: pairwise overlap, best-match report, histograms, ARI."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from math import comb
from pathlib import Path

from .errors import FormatError, ValidationError
from .grouping import Grouping
from .ioutils import atomic_write_text, read_json


def overlap(s_a: set[str], s_b: set[str]) -> float:
    """Size of the intersection over the size of the larger set; in [0, 1]."""
    if not s_a or not s_b:
        raise ValueError("overlap is undefined for empty sets")
    return len(s_a & s_b) / max(len(s_a), len(s_b))


@dataclass
class BestMatch:
    group_a: int
    group_b: int | None
    overlap: float


@dataclass
class OverlapReport:
    """For every group of A: its best-overlapping group of B, plus size histograms."""

    matches: list[BestMatch]
    size_histogram_a: dict[int, int]
    size_histogram_b: dict[int, int]
    mean_best_overlap: float

    def to_dict(self) -> dict:
        return {
            "matches": [
                {"group_a": m.group_a, "group_b": m.group_b, "overlap": float(m.overlap)}
                for m in self.matches
            ],
            "size_histogram_a": {str(k): v for k, v in sorted(self.size_histogram_a.items())},
            "size_histogram_b": {str(k): v for k, v in sorted(self.size_histogram_b.items())},
            "mean_best_overlap": float(self.mean_best_overlap),
        }


def report_from_dict(data: dict, source: str = "<dict>") -> OverlapReport:
    for key in ("matches", "size_histogram_a", "size_histogram_b", "mean_best_overlap"):
        if key not in data:
            raise FormatError(f"{source}: missing required key '{key}'")
    matches = [
        BestMatch(
            group_a=int(m["group_a"]),
            group_b=None if m["group_b"] is None else int(m["group_b"]),
            overlap=float(m["overlap"]),
        )
        for m in data["matches"]
    ]
    return OverlapReport(
        matches=matches,
        size_histogram_a={int(k): int(v) for k, v in data["size_histogram_a"].items()},
        size_histogram_b={int(k): int(v) for k, v in data["size_histogram_b"].items()},
        mean_best_overlap=float(data["mean_best_overlap"]),
    )


def save_report(report: OverlapReport, path: str | Path) -> None:
    atomic_write_text(path, json.dumps(report.to_dict(), indent=2) + "\n")


def load_report(path: str | Path) -> OverlapReport:
    return report_from_dict(read_json(path), source=str(path))


def best_match_report(a: Grouping, b: Grouping) -> OverlapReport:
    """Best-overlap match in B for every group of A.

    Ties go to the candidate group of B with the smallest contained id. Noise
    ids never participate: overlap is defined on groups only.
    """
    if a.all_ids() != b.all_ids():
        missing = sorted(a.all_ids() - b.all_ids())
        extra = sorted(b.all_ids() - a.all_ids())
        raise ValidationError(
            f"groupings cover different ids; only in A: {missing[:10]}, only in B: {extra[:10]}"
        )
    matches: list[BestMatch] = []
    for index_a, group_a in enumerate(a.groups):
        best: BestMatch | None = None
        best_key: tuple[float, str] | None = None
        for index_b, group_b in enumerate(b.groups):
            score = overlap(group_a.member_set(), group_b.member_set())
            key = (-score, min(group_b.ids))
            if best_key is None or key < best_key:
                best_key = key
                best = BestMatch(group_a=index_a, group_b=index_b, overlap=score)
        if best is None:
            best = BestMatch(group_a=index_a, group_b=None, overlap=0.0)
        matches.append(best)
    mean_best = sum(m.overlap for m in matches) / len(matches) if matches else 0.0
    return OverlapReport(
        matches=matches,
        size_histogram_a=dict(Counter(len(g.ids) for g in a.groups)),
        size_histogram_b=dict(Counter(len(g.ids) for g in b.groups)),
        mean_best_overlap=mean_best,
    )


def adjusted_rand_index(labels_a: dict[str, int], labels_b: dict[str, int]) -> float:
    """Chance-corrected pair-counting agreement between two labelings.

    1.0 for identical partitions (up to relabeling); around 0 for independent
    ones. Both maps must label exactly the same ids.
    """
    if set(labels_a) != set(labels_b):
        raise ValidationError("label maps must cover the same ids")
    n = len(labels_a)
    if n < 2:
        raise ValueError("adjusted rand index needs at least 2 labeled ids")
    contingency: Counter[tuple[int, int]] = Counter()
    count_a: Counter[int] = Counter()
    count_b: Counter[int] = Counter()
    for issue_id, la in labels_a.items():
        lb = labels_b[issue_id]
        contingency[(la, lb)] += 1
        count_a[la] += 1
        count_b[lb] += 1
    sum_cells = sum(comb(c, 2) for c in contingency.values())
    sum_a = sum(comb(c, 2) for c in count_a.values())
    sum_b = sum(comb(c, 2) for c in count_b.values())
    total = comb(n, 2)
    expected = sum_a * sum_b / total
    maximum = (sum_a + sum_b) / 2.0
    if maximum == expected:
        # Both partitions trivial (all singletons or one block): identical by construction.
        return 1.0
    return (sum_cells - expected) / (maximum - expected)


def histogram_csv(report: OverlapReport) -> str:
    """CSV of group-size counts for both groupings: size,count_a,count_b."""
    sizes = sorted(set(report.size_histogram_a) | set(report.size_histogram_b))
    lines = ["size,count_a,count_b"]
    for size in sizes:
        lines.append(
            f"{size},{report.size_histogram_a.get(size, 0)},{report.size_histogram_b.get(size, 0)}"
        )
    return "\n".join(lines) + "\n"


def summary_markdown(report: OverlapReport, a: Grouping, b: Grouping) -> str:
    """Markdown table of the best matches plus the mean overlap."""
    lines = [
        f"Comparing `{a.method}` ({len(a.groups)} groups) against `{b.method}` ({len(b.groups)} groups).",
        "",
        "| group (A) | size | best match (B) | size | overlap |",
        "|---|---|---|---|---|",
    ]
    for m in report.matches:
        size_a = len(a.groups[m.group_a].ids)
        if m.group_b is None:
            lines.append(f"| {m.group_a} | {size_a} | - | - | 0.00 |")
        else:
            size_b = len(b.groups[m.group_b].ids)
            lines.append(f"| {m.group_a} | {size_a} | {m.group_b} | {size_b} | {m.overlap:.2f} |")
    lines.append("")
    lines.append(f"Mean best overlap: **{report.mean_best_overlap:.3f}**")
    if a.noise or b.noise:
        lines.append(f"Noise ids excluded: {len(a.noise)} (A), {len(b.noise)} (B).")
    return "\n".join(lines) + "\n"
