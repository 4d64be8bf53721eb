"""Cluster-based grouping: staged PCA reduction, then density clustering.

The density clustering follows the HDBSCAN construction: core distances,
mutual reachability, an exact minimum spanning tree, a single-linkage
hierarchy condensed by minimum cluster size, and excess-of-mass cluster
extraction. Points that never join a stable cluster are noise.

The built-in reducer is plain PCA; coordinates computed elsewhere (e.g. by a
nonlinear reducer) can be imported with load_reduced instead.
"""
from __future__ import annotations

import json
import math
import warnings
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .embeddings import EmbeddingSet
from .errors import FormatError, ValidationError
from .grouping import Group, Grouping, METHOD_CLUSTER

NOISE = -1


@dataclass
class ReducedCoordinates:
    """Low-dimensional coordinates per issue id, with reducer provenance."""

    ids: list[str]
    coords: np.ndarray
    reducer: str

    def __post_init__(self) -> None:
        self.coords = np.asarray(self.coords, dtype=np.float64)
        if self.coords.ndim != 2 or self.coords.shape[0] != len(self.ids):
            raise ValidationError(
                f"coords shape {self.coords.shape} does not match {len(self.ids)} ids"
            )
        if len(set(self.ids)) != len(self.ids):
            raise ValidationError("duplicate ids in reduced coordinates")
        if not np.all(np.isfinite(self.coords)):
            raise ValidationError("reduced coordinates contain NaN/Inf")

    @property
    def dim(self) -> int:
        return int(self.coords.shape[1])


@dataclass
class ClusterLabels:
    """Cluster index per id (NOISE = -1), with the parameters that produced it."""

    labels: dict[str, int]
    params: tuple[int, int]

    def cluster_indices(self) -> list[int]:
        return sorted({v for v in self.labels.values() if v != NOISE})

    def members(self, index: int) -> list[str]:
        return [i for i, v in self.labels.items() if v == index]

    def noise_ids(self) -> list[str]:
        return sorted(i for i, v in self.labels.items() if v == NOISE)


def reduce_pca(
    embedding_set: EmbeddingSet,
    stages: Sequence[int] = (15, 2),
    seed: int = 0,
) -> ReducedCoordinates:
    """Reduce embeddings through successive PCA projections (e.g. 768 -> 15 -> 2).

    Each stage mean-centers and projects onto the top principal directions in
    descending eigenvalue order, flipping signs so the largest-magnitude
    loading of each direction is positive. Deterministic; the seed argument
    exists for reducer interchangeability and is unused by PCA.
    """
    del seed
    stages = [int(s) for s in stages]
    if not stages:
        raise ValueError("stages must not be empty")
    if stages[-1] < 2:
        raise ValueError(f"final stage must be >= 2, got {stages[-1]}")
    if any(b >= a for a, b in zip(stages, stages[1:])):
        raise ValueError(f"stages must be strictly decreasing, got {stages}")
    if stages[0] >= embedding_set.dim:
        raise ValueError(
            f"first stage {stages[0]} must be below the embedding dim {embedding_set.dim}"
        )
    n = len(embedding_set)
    if n <= stages[-1]:
        raise ValueError(f"need more than {stages[-1]} points, got {n}")

    coords = embedding_set.matrix()
    for stage in stages:
        coords = _pca_stage(coords, stage)
    reducer = "pca:" + "->".join([str(embedding_set.dim)] + [str(s) for s in stages])
    return ReducedCoordinates(ids=embedding_set.ids(), coords=coords, reducer=reducer)


def _pca_stage(data: np.ndarray, k: int) -> np.ndarray:
    centered = data - data.mean(axis=0)
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    available = vt.shape[0]
    take = min(k, available)
    components = vt[:take].copy()
    for row in components:
        peak = int(np.argmax(np.abs(row)))
        if row[peak] < 0:
            row *= -1.0
    projected = centered @ components.T
    rank = int(np.sum(singular > (singular[0] * 1e-12 if singular.size else 0.0)))
    if rank < k:
        # Rank-deficient data: directions beyond the rank carry no signal.
        out = np.zeros((data.shape[0], k), dtype=np.float64)
        out[:, : min(rank, take)] = projected[:, : min(rank, take)]
        warnings.warn(
            f"pca stage {k}: data rank is only {rank}; trailing components zero-filled",
            RuntimeWarning,
        )
        return out
    return projected


def load_reduced(path: str | Path, expected_ids: Iterable[str] | None = None) -> ReducedCoordinates:
    """Read reduced coordinates JSON, optionally checking ids against a corpus."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise FormatError(f"{path}: expected a top-level object")
    for key in ("reducer", "dim", "coords"):
        if key not in data:
            raise FormatError(f"{path}: missing required key '{key}'")
    dim = data["dim"]
    raw = data["coords"]
    if not isinstance(dim, int) or dim < 1 or not isinstance(raw, dict):
        raise FormatError(f"{path}: 'dim' must be a positive int and 'coords' an object")
    ids = list(raw.keys())
    rows = []
    for issue_id in ids:
        values = raw[issue_id]
        if not isinstance(values, list) or len(values) != dim:
            raise FormatError(f"{path}: coords for id {issue_id!r} do not have length {dim}")
        rows.append(values)
    if expected_ids is not None:
        expected = set(expected_ids)
        got = set(ids)
        if expected != got:
            missing = sorted(expected - got)
            extra = sorted(got - expected)
            raise ValidationError(
                f"{path}: ids do not match the corpus; missing {missing[:10]}, extra {extra[:10]}"
            )
    return ReducedCoordinates(ids=ids, coords=np.asarray(rows, dtype=np.float64),
                              reducer=str(data["reducer"]))


def save_reduced(reduction: ReducedCoordinates, path: str | Path) -> None:
    from .ioutils import atomic_write_text

    payload = {
        "reducer": reduction.reducer,
        "dim": reduction.dim,
        "coords": {i: [float(x) for x in row] for i, row in zip(reduction.ids, reduction.coords)},
    }
    atomic_write_text(path, json.dumps(payload, indent=2) + "\n")


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    """Dense Euclidean distance matrix, symmetric by construction."""
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def core_distances(distances: np.ndarray, min_samples: int) -> np.ndarray:
    """Distance from each point to its min_samples-th nearest other point."""
    n = distances.shape[0]
    k = min(min_samples, n - 1)
    return np.partition(distances, k, axis=1)[:, k]


def mutual_reachability(distances: np.ndarray, min_samples: int) -> np.ndarray:
    """max(core(a), core(b), dist(a, b)) with a zero diagonal."""
    core = core_distances(distances, min_samples)
    reach = np.maximum(np.maximum(core[:, None], core[None, :]), distances)
    np.fill_diagonal(reach, 0.0)
    return reach


def minimum_spanning_tree_edges(weights: np.ndarray) -> list[tuple[int, int, float]]:
    """Exact Prim MST over a dense symmetric weight matrix; n-1 edges."""
    n = weights.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = weights[0].astype(np.float64).copy()
    source = np.zeros(n, dtype=np.int64)
    best[0] = np.inf
    edges: list[tuple[int, int, float]] = []
    for _ in range(n - 1):
        candidate = np.where(in_tree, np.inf, best)
        nxt = int(np.argmin(candidate))
        edges.append((int(source[nxt]), nxt, float(best[nxt])))
        in_tree[nxt] = True
        closer = ~in_tree & (weights[nxt] < best)
        best[closer] = weights[nxt][closer]
        source[closer] = nxt
    return edges


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int, new: int) -> None:
        self.parent.append(new)
        self.parent[a] = new
        self.parent[b] = new


def _single_linkage(edges: list[tuple[int, int, float]], n: int) -> list[tuple[int, int, float, int]]:
    """Merge MST edges in ascending order into a dendrogram.

    Returns one row (left, right, distance, size) per internal node; node ids
    n..2n-2 refer to earlier rows, ids < n are points.
    """
    ordered = sorted(edges, key=lambda e: (e[2], e[0], e[1]))
    uf = _UnionFind(n)
    sizes = [1] * n
    rows: list[tuple[int, int, float, int]] = []
    for u, v, w in ordered:
        ru, rv = uf.find(u), uf.find(v)
        new = n + len(rows)
        uf.union(ru, rv, new)
        size = sizes[ru] + sizes[rv]
        sizes.append(size)
        rows.append((ru, rv, w, size))
    return rows


def _lambda_of(distance: float) -> float:
    return math.inf if distance <= 0.0 else 1.0 / distance


def _lambda_gap(outer: float, inner: float) -> float:
    # inf - inf would be NaN; such spans contribute no mass.
    if math.isinf(outer) and math.isinf(inner):
        return 0.0
    return outer - inner


@dataclass
class _CondensedTree:
    # Point departures: (cluster, point, lambda). Cluster splits:
    # (parent, child, lambda, size). Cluster 0 is the root.
    point_rows: list[tuple[int, int, float]]
    cluster_rows: list[tuple[int, int, float, int]]
    parent_of: dict[int, int | None]
    birth: dict[int, float]


def _subtree_points(node: int, dendrogram: list[tuple[int, int, float, int]], n: int) -> list[int]:
    points = []
    stack = [node]
    while stack:
        current = stack.pop()
        if current < n:
            points.append(current)
        else:
            left, right, _, _ = dendrogram[current - n]
            stack.extend((left, right))
    return points


def _condense(
    dendrogram: list[tuple[int, int, float, int]], n: int, min_cluster_size: int
) -> _CondensedTree:
    """Collapse the dendrogram into clusters of at least min_cluster_size points."""
    tree = _CondensedTree(point_rows=[], cluster_rows=[], parent_of={0: None}, birth={0: 0.0})
    if n == 1:
        tree.point_rows.append((0, 0, math.inf))
        return tree
    root = n + len(dendrogram) - 1
    relabel = {root: 0}
    next_cluster = 1
    queue: deque[int] = deque([root])
    while queue:
        node = queue.popleft()
        cid = relabel[node]
        left, right, distance, _ = dendrogram[node - n]
        lam = _lambda_of(distance)
        left_size = 1 if left < n else dendrogram[left - n][3]
        right_size = 1 if right < n else dendrogram[right - n][3]
        big_left = left_size >= min_cluster_size
        big_right = right_size >= min_cluster_size

        if big_left and big_right:
            for child, size in ((left, left_size), (right, right_size)):
                child_id = next_cluster
                next_cluster += 1
                relabel[child] = child_id
                tree.cluster_rows.append((cid, child_id, lam, size))
                tree.parent_of[child_id] = cid
                tree.birth[child_id] = lam
                queue.append(child)
        elif big_left or big_right:
            keep, drop = (left, right) if big_left else (right, left)
            for point in _subtree_points(drop, dendrogram, n):
                tree.point_rows.append((cid, point, lam))
            relabel[keep] = cid
            queue.append(keep)
        else:
            for child in (left, right):
                for point in _subtree_points(child, dendrogram, n):
                    tree.point_rows.append((cid, point, lam))
    return tree


def _stabilities(tree: _CondensedTree) -> dict[int, float]:
    sigma = {cid: 0.0 for cid in tree.parent_of}
    for cid, _point, lam in tree.point_rows:
        sigma[cid] += _lambda_gap(lam, tree.birth[cid])
    for parent, _child, lam, size in tree.cluster_rows:
        sigma[parent] += size * _lambda_gap(lam, tree.birth[parent])
    return sigma


def _select_excess_of_mass(tree: _CondensedTree) -> set[int]:
    """Pick the set of clusters maximizing total stability; the root never wins."""
    sigma = _stabilities(tree)
    children: dict[int, list[int]] = {cid: [] for cid in tree.parent_of}
    for parent, child, _lam, _size in tree.cluster_rows:
        children[parent].append(child)
    propagated: dict[int, float] = {}
    preferred: dict[int, bool] = {}
    for cid in sorted(tree.parent_of, reverse=True):
        child_total = sum(propagated[ch] for ch in children[cid])
        if children[cid] and child_total > sigma[cid]:
            propagated[cid] = child_total
            preferred[cid] = False
        else:
            propagated[cid] = sigma[cid]
            preferred[cid] = True
    preferred[0] = False
    selected: set[int] = set()
    for cid in sorted(tree.parent_of):
        if not preferred[cid]:
            continue
        ancestor = tree.parent_of[cid]
        shadowed = False
        while ancestor is not None:
            if ancestor in selected:
                shadowed = True
                break
            ancestor = tree.parent_of[ancestor]
        if not shadowed:
            selected.add(cid)
    return selected


def hdbscan(
    coords: ReducedCoordinates,
    min_cluster_size: int = 3,
    min_samples: int = 3,
) -> ClusterLabels:
    """Density clustering of reduced coordinates; unstable points become NOISE.

    Cluster indices are contiguous from 0 and canonically ordered by each
    cluster's smallest member id, so equal inputs in any order yield equal
    label maps.
    """
    if min_cluster_size < 2:
        raise ValueError(f"min_cluster_size must be >= 2, got {min_cluster_size}")
    if min_samples < 1:
        raise ValueError(f"min_samples must be >= 1, got {min_samples}")
    n = len(coords.ids)
    if n < min_cluster_size:
        raise ValueError(f"need at least min_cluster_size={min_cluster_size} points, got {n}")

    order = sorted(range(n), key=lambda i: coords.ids[i])
    ids = [coords.ids[i] for i in order]
    points = coords.coords[order]

    distances = pairwise_distances(points)
    reach = mutual_reachability(distances, min_samples)
    mst = minimum_spanning_tree_edges(reach)

    if all(w <= 0.0 for _, _, w in mst):
        # Fully coincident data: a single zero-diameter cluster, no noise.
        return ClusterLabels(labels={i: 0 for i in ids}, params=(min_cluster_size, min_samples))

    dendrogram = _single_linkage(mst, n)
    tree = _condense(dendrogram, n, min_cluster_size)
    selected = _select_excess_of_mass(tree)

    assignment: dict[int, int] = {}
    for cid, point, _lam in tree.point_rows:
        node: int | None = cid
        label = NOISE
        while node is not None:
            if node in selected:
                label = node
                break
            node = tree.parent_of[node]
        assignment[point] = label

    clusters = sorted(
        {c for c in assignment.values() if c != NOISE},
        key=lambda c: min(ids[p] for p, lab in assignment.items() if lab == c),
    )
    canonical = {c: i for i, c in enumerate(clusters)}
    labels = {
        ids[p]: (canonical[lab] if lab != NOISE else NOISE) for p, lab in assignment.items()
    }
    return ClusterLabels(labels=labels, params=(min_cluster_size, min_samples))


def group_by_cluster(
    embedding_set: EmbeddingSet,
    reduction: ReducedCoordinates,
    labels: ClusterLabels,
) -> Grouping:
    """Turn cluster labels into a Grouping; noise ids are reported, not forced.

    Within a group, importance is each member's mean cosine similarity to the
    other members, rescaled to sum to 1 per group. The graph method gets its
    importance from PageRank instead; this is the cluster-side stand-in.
    """
    set_ids = set(embedding_set.ids())
    if set(reduction.ids) != set_ids or set(labels.labels) != set_ids:
        raise ValidationError("embedding set, reduction, and labels must cover the same ids")

    unit = {}
    for issue_id, vec in embedding_set.vectors.items():
        unit[issue_id] = vec / np.linalg.norm(vec)

    raw_groups: list[list[str]] = [labels.members(c) for c in labels.cluster_indices()]
    raw_groups.sort(key=lambda member_ids: (-len(member_ids), min(member_ids)))

    groups: list[Group] = []
    for member_ids in raw_groups:
        if len(member_ids) == 1:
            only = member_ids[0]
            groups.append(Group(ids=[only], importance={only: 1.0}))
            continue
        raw: dict[str, float] = {}
        for issue_id in member_ids:
            sims = [float(unit[issue_id] @ unit[other]) for other in member_ids if other != issue_id]
            raw[issue_id] = sum(sims) / len(sims)
        total = sum(raw.values())
        if total > 0.0:
            importance = {i: raw[i] / total for i in member_ids}
        else:
            importance = {i: 1.0 / len(member_ids) for i in member_ids}
        ordered = sorted(member_ids, key=lambda i: (-importance[i], i))
        groups.append(Group(ids=ordered, importance={i: importance[i] for i in ordered}))
    return Grouping(method=METHOD_CLUSTER, groups=groups, noise=labels.noise_ids())
