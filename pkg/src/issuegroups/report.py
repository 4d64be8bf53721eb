"""Human-readable markdown consolidation report for a grouping."""
from __future__ import annotations

from .corpus import Corpus
from .grouping import Grouping, METHOD_GRAPH

_IMPORTANCE_NOTE = {
    METHOD_GRAPH: "importance: PageRank over the 1-NN similarity graph",
    "cluster": "importance: mean similarity to the other group members (rescaled per group)",
}


def render_report(grouping: Grouping, corpus: Corpus) -> str:
    """Per-group member tables ordered by importance, plus noise and WG mixing."""
    issues = {issue.id: issue for issue in corpus}
    missing = sorted(grouping.all_ids() - set(issues))
    if missing:
        raise ValueError(f"grouping references ids not in the corpus: {missing[:10]}")

    lines = [
        f"# Issue groups ({grouping.method} method)",
        "",
        f"{len(grouping.groups)} groups over {len(grouping.all_ids())} issues"
        f" ({len(grouping.noise)} left as noise).",
        f"_{_IMPORTANCE_NOTE.get(grouping.method, 'importance: method-specific score')}_",
        "",
    ]
    mixed = 0
    for index, group in enumerate(grouping.groups):
        wgs = {issues[i].working_group for i in group.ids}
        if len(wgs) >= 2:
            mixed += 1
        lines.append(f"## Group {index} ({len(group.ids)} issues, {len(wgs)} working groups)")
        lines.append("")
        lines.append("| rank | id | working group | importance | title |")
        lines.append("|---|---|---|---|---|")
        for rank, issue_id in enumerate(group.ids, start=1):
            issue = issues[issue_id]
            title = issue.title.replace("|", "\\|")
            lines.append(
                f"| {rank} | {issue_id} | {issue.working_group} "
                f"| {group.importance[issue_id]:.4f} | {title} |"
            )
        lines.append("")
    if grouping.noise:
        lines.append("## Noise (unassigned)")
        lines.append("")
        for issue_id in grouping.noise:
            issue = issues[issue_id]
            lines.append(f"- {issue_id} ({issue.working_group}): {issue.title}")
        lines.append("")
    if grouping.groups:
        lines.append(
            f"{mixed} of {len(grouping.groups)} groups contain issues"
            " from at least 2 working groups."
        )
    return "\n".join(lines) + "\n"
