"""The Grouping data model shared by both methods, plus its JSON round-trip."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import FormatError, ValidationError
from .ioutils import atomic_write_text, read_json

METHOD_GRAPH = "graph"
METHOD_CLUSTER = "cluster"


@dataclass
class Group:
    """One group of issue ids with per-id importance, ordered most important first."""

    ids: list[str]
    importance: dict[str, float]

    def __post_init__(self) -> None:
        if not self.ids:
            raise ValidationError("a group must contain at least one id")
        if set(self.ids) != set(self.importance):
            raise ValidationError("group ids and importance keys must match")

    def member_set(self) -> frozenset[str]:
        return frozenset(self.ids)


@dataclass
class Grouping:
    """A partition of corpus ids into groups plus (for the cluster method) noise."""

    method: str
    groups: list[Group]
    noise: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for group in self.groups:
            overlap = seen & set(group.ids)
            if overlap:
                raise ValidationError(f"ids in more than one group: {sorted(overlap)}")
            seen |= set(group.ids)
        dup_noise = seen & set(self.noise)
        if dup_noise:
            raise ValidationError(f"ids both grouped and noise: {sorted(dup_noise)}")
        if len(set(self.noise)) != len(self.noise):
            raise ValidationError("duplicate ids in noise")

    def all_ids(self) -> set[str]:
        ids = {i for g in self.groups for i in g.ids}
        ids.update(self.noise)
        return ids

    def labels(self) -> dict[str, int]:
        """Group index per non-noise id (noise ids omitted)."""
        return {i: gi for gi, g in enumerate(self.groups) for i in g.ids}

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "groups": [
                {"ids": list(g.ids), "importance": {i: float(g.importance[i]) for i in g.ids}}
                for g in self.groups
            ],
            "noise": list(self.noise),
        }


def grouping_from_dict(data: dict, source: str = "<dict>") -> Grouping:
    if not isinstance(data, dict):
        raise FormatError(f"{source}: expected a top-level object")
    for key in ("method", "groups", "noise"):
        if key not in data:
            raise FormatError(f"{source}: missing required key '{key}'")
    groups = []
    for i, raw in enumerate(data["groups"]):
        if not isinstance(raw, dict) or "ids" not in raw or "importance" not in raw:
            raise FormatError(f"{source}: groups[{i}] needs 'ids' and 'importance'")
        groups.append(
            Group(ids=[str(x) for x in raw["ids"]],
                  importance={str(k): float(v) for k, v in raw["importance"].items()})
        )
    return Grouping(method=str(data["method"]), groups=groups, noise=[str(x) for x in data["noise"]])


def save_grouping(grouping: Grouping, path: str | Path) -> None:
    atomic_write_text(path, json.dumps(grouping.to_dict(), indent=2) + "\n")


def load_grouping(path: str | Path) -> Grouping:
    data = read_json(path)
    return grouping_from_dict(data, source=str(path))
