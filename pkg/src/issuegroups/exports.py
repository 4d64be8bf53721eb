"""Graph and scatter exporters: DOT, GraphML, and the 2-d scatter CSV.

Rendering conventions: node size tracks importance, node color tracks the
working group, edge thickness tracks similarity.
"""
from __future__ import annotations

import xml.etree.ElementTree as ET

from .cluster import ClusterLabels, ReducedCoordinates
from .graph import SimilarityGraph

PALETTE = (
    "#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3",
    "#937860", "#da8bc3", "#8c8c8c", "#ccb974", "#64b5cd",
)

_MIN_NODE_WIDTH = 0.25
_MAX_NODE_WIDTH = 2.0


def working_group_colors(working_groups: dict[str, str]) -> dict[str, str]:
    """Stable color per working group label, cycling a fixed palette."""
    names = sorted(set(working_groups.values()))
    return {name: PALETTE[i % len(PALETTE)] for i, name in enumerate(names)}


def _node_width(score: float, max_score: float) -> float:
    if max_score <= 0.0:
        return _MIN_NODE_WIDTH
    return round(_MIN_NODE_WIDTH + (_MAX_NODE_WIDTH - _MIN_NODE_WIDTH) * score / max_score, 4)


def _edge_penwidth(weight: float) -> float:
    return round(0.2 + 3.8 * min(max(weight, 0.0), 1.0), 4)


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(
    graph: SimilarityGraph,
    importance: dict[str, float],
    working_groups: dict[str, str],
) -> str:
    """DOT digraph with width ~ importance, color = working group, penwidth ~ weight."""
    colors = working_group_colors(working_groups)
    max_score = max(importance.values(), default=0.0)
    lines = ["digraph issues {", "  node [shape=circle, style=filled, fixedsize=true];"]
    for node in graph.nodes:
        width = _node_width(importance.get(node, 0.0), max_score)
        color = colors[working_groups[node]]
        lines.append(
            f"  {_dot_quote(node)} [label={_dot_quote(node)}, width={width}, color=\"{color}\"];"
        )
    for edge in graph.edges:
        lines.append(
            f"  {_dot_quote(edge.src)} -> {_dot_quote(edge.dst)} "
            f"[penwidth={_edge_penwidth(edge.weight)}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_graphml(
    graph: SimilarityGraph,
    importance: dict[str, float],
    working_groups: dict[str, str],
) -> str:
    """GraphML with the same node/edge attributes as the DOT export."""
    colors = working_group_colors(working_groups)
    max_score = max(importance.values(), default=0.0)
    root = ET.Element("graphml", xmlns="http://graphml.graphdrawing.org/xmlns")
    keys = [
        ("d_width", "node", "width", "double"),
        ("d_color", "node", "color", "string"),
        ("d_wg", "node", "working_group", "string"),
        ("d_importance", "node", "importance", "double"),
        ("d_weight", "edge", "weight", "double"),
        ("d_penwidth", "edge", "penwidth", "double"),
    ]
    for key_id, target, name, kind in keys:
        ET.SubElement(root, "key", id=key_id, attrib={
            "for": target, "attr.name": name, "attr.type": kind,
        })
    graph_el = ET.SubElement(root, "graph", id="issues", edgedefault="directed")
    for node in graph.nodes:
        node_el = ET.SubElement(graph_el, "node", id=node)
        values = {
            "d_width": str(_node_width(importance.get(node, 0.0), max_score)),
            "d_color": colors[working_groups[node]],
            "d_wg": working_groups[node],
            "d_importance": repr(float(importance.get(node, 0.0))),
        }
        for key_id, text in values.items():
            data = ET.SubElement(node_el, "data", key=key_id)
            data.text = text
    for i, edge in enumerate(graph.edges):
        edge_el = ET.SubElement(graph_el, "edge", id=f"e{i}", source=edge.src, target=edge.dst)
        for key_id, text in (
            ("d_weight", repr(float(edge.weight))),
            ("d_penwidth", str(_edge_penwidth(edge.weight))),
        ):
            data = ET.SubElement(edge_el, "data", key=key_id)
            data.text = text
    ET.indent(root)
    return ET.tostring(root, encoding="unicode", xml_declaration=True) + "\n"


def scatter_csv(
    reduction: ReducedCoordinates,
    labels: ClusterLabels,
    working_groups: dict[str, str],
) -> str:
    """Per-issue 2-d position, cluster index (-1 = noise), and working group."""
    lines = ["id,x,y,cluster,working_group"]
    for issue_id, row in zip(reduction.ids, reduction.coords):
        x = repr(float(row[0]))
        y = repr(float(row[1])) if reduction.dim > 1 else "0.0"
        lines.append(f"{issue_id},{x},{y},{labels.labels[issue_id]},{working_groups[issue_id]}")
    return "\n".join(lines) + "\n"
