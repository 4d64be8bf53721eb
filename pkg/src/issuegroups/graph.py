"""Graph-based grouping: 1-NN similarity graph, weak components, PageRank.

Every issue points at its single most similar issue; groups are the weakly
connected components of that graph and PageRank over it ranks issues within
each group.
"""
from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass

from .grouping import Group, Grouping, METHOD_GRAPH
from .similarity import SimilarityMatrix, knn


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    weight: float


@dataclass
class SimilarityGraph:
    """Directed weighted graph over issue ids; k is the neighbor count used."""

    nodes: list[str]
    edges: list[Edge]
    k: int = 1

    def out_edges(self) -> dict[str, list[Edge]]:
        adjacency: dict[str, list[Edge]] = {node: [] for node in self.nodes}
        for edge in self.edges:
            adjacency[edge.src].append(edge)
        return adjacency


def build_knn_graph(matrix: SimilarityMatrix, k: int) -> SimilarityGraph:
    """Each node gets edges to its k most similar issues, weighted by cosine."""
    neighbors = knn(matrix, k)
    edges = [
        Edge(src=issue_id, dst=other, weight=sim)
        for issue_id in matrix.ids
        for other, sim in neighbors[issue_id]
    ]
    return SimilarityGraph(nodes=list(matrix.ids), edges=edges, k=k)


def build_1nn_graph(matrix: SimilarityMatrix) -> SimilarityGraph:
    """The 1-nearest-neighbor graph: exactly one outgoing edge per node."""
    return build_knn_graph(matrix, 1)


def weakly_connected_components(graph: SimilarityGraph) -> list[set[str]]:
    """Connected components of the undirected edge set.

    Sorted by descending size, then ascending smallest contained id.
    """
    if not graph.nodes:
        raise ValueError("graph has no nodes")
    undirected: dict[str, set[str]] = {node: set() for node in graph.nodes}
    for edge in graph.edges:
        undirected[edge.src].add(edge.dst)
        undirected[edge.dst].add(edge.src)
    seen: set[str] = set()
    components: list[set[str]] = []
    for node in graph.nodes:
        if node in seen:
            continue
        component = {node}
        queue = deque([node])
        seen.add(node)
        while queue:
            current = queue.popleft()
            for neighbor in undirected[current]:
                if neighbor not in seen:
                    seen.add(neighbor)
                    component.add(neighbor)
                    queue.append(neighbor)
        components.append(component)
    components.sort(key=lambda c: (-len(c), min(c)))
    return components


@dataclass
class PageRankResult:
    scores: dict[str, float]
    converged: bool
    iterations: int


def pagerank(
    graph: SimilarityGraph,
    damping: float = 0.85,
    tol: float = 1e-9,
    max_iter: int = 100,
) -> PageRankResult:
    """Weighted PageRank by power iteration.

    Each node spreads rank to its out-neighbors proportionally to edge weight
    (uniformly if the weights do not sum to something positive). Stops when
    the L1 change drops below tol; a run that exhausts max_iter comes back
    with converged=False and a warning.
    """
    if not 0.0 < damping < 1.0:
        raise ValueError(f"damping must be in (0, 1), got {damping}")
    nodes = graph.nodes
    n = len(nodes)
    if n == 0:
        raise ValueError("graph has no nodes")
    out = graph.out_edges()
    dangling = [node for node, edges in out.items() if not edges]
    if dangling:
        raise ValueError(f"every node needs out-degree >= 1; dangling: {sorted(dangling)[:5]}")

    shares: dict[str, list[tuple[str, float]]] = {}
    for node, edges in out.items():
        total = sum(e.weight for e in edges)
        if total > 0.0:
            shares[node] = [(e.dst, e.weight / total) for e in edges]
        else:
            shares[node] = [(e.dst, 1.0 / len(edges)) for e in edges]

    scores = {node: 1.0 / n for node in nodes}
    base = (1.0 - damping) / n
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        incoming = {node: 0.0 for node in nodes}
        for node in nodes:
            rank = scores[node]
            for dst, share in shares[node]:
                incoming[dst] += rank * share
        new_scores = {node: base + damping * incoming[node] for node in nodes}
        delta = sum(abs(new_scores[node] - scores[node]) for node in nodes)
        scores = new_scores
        if delta < tol:
            converged = True
            break
    if not converged:
        warnings.warn(f"pagerank did not converge within {max_iter} iterations", RuntimeWarning)
    return PageRankResult(scores=scores, converged=converged, iterations=iterations)


def group_by_graph(
    matrix: SimilarityMatrix,
    damping: float = 0.85,
    tol: float = 1e-9,
    max_iter: int = 100,
) -> Grouping:
    """Full graph pipeline: 1-NN graph -> weak components -> PageRank ordering."""
    graph = build_1nn_graph(matrix)
    components = weakly_connected_components(graph)
    importance = pagerank(graph, damping=damping, tol=tol, max_iter=max_iter).scores
    groups = []
    for component in components:
        ordered = sorted(component, key=lambda i: (-importance[i], i))
        groups.append(Group(ids=ordered, importance={i: importance[i] for i in ordered}))
    return Grouping(method=METHOD_GRAPH, groups=groups, noise=[])
