"""Command-line interface: synth, embed, group, compare, report.

Configuration comes from defaults, then an optional JSON config file, then
flags, in increasing precedence. Outputs are computed fully before any file
is written, and every file is written atomically, so a failed run leaves no
partial outputs behind.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import cluster as cluster_mod
from . import compare as compare_mod
from .corpus import Corpus, load_corpus, synth_corpus, write_corpus
from .embeddings import embed_corpus, provider_bow, provider_file, provider_http, save_embeddings
from .exports import scatter_csv, to_dot, to_graphml
from .graph import build_1nn_graph, group_by_graph
from .grouping import load_grouping
from .ioutils import atomic_write_text, write_json
from .report import render_report
from .similarity import matrix_csv, similarity_matrix


@dataclass
class ProviderConfig:
    kind: str = "bow"
    dim: int = 768
    path: str | None = None
    base_url: str | None = None
    model_name: str = ""
    timeout: float = 30.0
    batch_size: int = 32


@dataclass
class RunConfig:
    corpus_path: str | None = None
    corpus_format: str | None = None
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    method: str = "both"
    stages: list[int] = field(default_factory=lambda: [15, 2])
    coords_path: str | None = None
    min_cluster_size: int = 3
    min_samples: int = 3
    damping: float = 0.85
    pagerank_tol: float = 1e-9
    pagerank_max_iter: int = 100
    out_dir: str = "."
    seed: int = 0
    dump_matrix: bool = False


_CONFIG_KEYS = {"corpus", "provider", "method", "reduce", "hdbscan", "pagerank", "out", "seed"}


def load_config_file(path: str | Path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
    cfg = RunConfig()
    corpus = data.get("corpus", {})
    cfg.corpus_path = corpus.get("path", cfg.corpus_path)
    cfg.corpus_format = corpus.get("format", cfg.corpus_format)
    provider = data.get("provider", {})
    if provider:
        known = {"kind", "dim", "path", "base_url", "model_name", "timeout", "batch_size"}
        bad = set(provider) - known
        if bad:
            raise ValueError(f"{path}: unknown provider keys {sorted(bad)}")
        cfg.provider = replace(ProviderConfig(), **provider)
    cfg.method = data.get("method", cfg.method)
    reduce_cfg = data.get("reduce", {})
    if "stages" in reduce_cfg:
        cfg.stages = [int(s) for s in reduce_cfg["stages"]]
    if "coords_path" in reduce_cfg:
        cfg.coords_path = reduce_cfg["coords_path"]
    hdb = data.get("hdbscan", {})
    cfg.min_cluster_size = int(hdb.get("min_cluster_size", cfg.min_cluster_size))
    cfg.min_samples = int(hdb.get("min_samples", cfg.min_samples))
    pr = data.get("pagerank", {})
    cfg.damping = float(pr.get("damping", cfg.damping))
    cfg.pagerank_tol = float(pr.get("tol", cfg.pagerank_tol))
    cfg.pagerank_max_iter = int(pr.get("max_iter", cfg.pagerank_max_iter))
    cfg.out_dir = data.get("out", cfg.out_dir)
    cfg.seed = int(data.get("seed", cfg.seed))
    return cfg


def _merge_args(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    """Apply CLI flags (only those actually given) over the config."""
    if getattr(args, "corpus", None):
        cfg.corpus_path = args.corpus
    if getattr(args, "format", None):
        cfg.corpus_format = args.format
    if getattr(args, "provider", None):
        cfg.provider.kind = args.provider
    if getattr(args, "dim", None) is not None:
        cfg.provider.dim = args.dim
    if getattr(args, "embeddings_file", None):
        cfg.provider.path = args.embeddings_file
    if getattr(args, "base_url", None):
        cfg.provider.base_url = args.base_url
    if getattr(args, "model_name", None):
        cfg.provider.model_name = args.model_name
    if getattr(args, "timeout", None) is not None:
        cfg.provider.timeout = args.timeout
    if getattr(args, "batch_size", None) is not None:
        cfg.provider.batch_size = args.batch_size
    if getattr(args, "method", None):
        cfg.method = args.method
    if getattr(args, "stages", None):
        cfg.stages = [int(s) for s in args.stages.split(",") if s.strip()]
    if getattr(args, "coords", None):
        cfg.coords_path = args.coords
    if getattr(args, "min_cluster_size", None) is not None:
        cfg.min_cluster_size = args.min_cluster_size
    if getattr(args, "min_samples", None) is not None:
        cfg.min_samples = args.min_samples
    if getattr(args, "damping", None) is not None:
        cfg.damping = args.damping
    if getattr(args, "pr_tol", None) is not None:
        cfg.pagerank_tol = args.pr_tol
    if getattr(args, "pr_max_iter", None) is not None:
        cfg.pagerank_max_iter = args.pr_max_iter
    if getattr(args, "out", None):
        cfg.out_dir = args.out
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "dump_matrix", False):
        cfg.dump_matrix = True
    return cfg


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config_file(args.config) if getattr(args, "config", None) else RunConfig()
    return _merge_args(cfg, args)


def build_provider(cfg: RunConfig):
    kind = cfg.provider.kind
    if kind == "bow":
        return provider_bow(dim=cfg.provider.dim, seed=cfg.seed)
    if kind == "file":
        if not cfg.provider.path:
            raise ValueError("file provider needs an embeddings path (--embeddings-file)")
        return provider_file(cfg.provider.path)
    if kind == "http":
        if not cfg.provider.base_url:
            raise ValueError("http provider needs a base url (--base-url)")
        return provider_http(
            cfg.provider.base_url,
            model_name=cfg.provider.model_name,
            timeout=cfg.provider.timeout,
            batch_size=cfg.provider.batch_size,
        )
    raise ValueError(f"unknown provider kind {kind!r} (expected bow, file, or http)")


def _load_corpus_from(cfg: RunConfig) -> Corpus:
    if not cfg.corpus_path:
        raise ValueError("no corpus given; pass --corpus or set corpus.path in the config")
    return load_corpus(cfg.corpus_path, cfg.corpus_format)


def _outdir(cfg_or_path) -> Path:
    out = Path(cfg_or_path.out_dir if isinstance(cfg_or_path, RunConfig) else cfg_or_path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_embed(cfg: RunConfig) -> int:
    corpus = _load_corpus_from(cfg)
    provider = build_provider(cfg)
    embedding_set = embed_corpus(corpus, provider)
    out = _outdir(cfg)
    save_embeddings(embedding_set, out / "embeddings.json")
    print(
        f"embedded {len(embedding_set)} issues at dim {embedding_set.dim} "
        f"with model '{embedding_set.model_name}' -> {out / 'embeddings.json'}"
    )
    return 0


def cmd_group(cfg: RunConfig) -> int:
    if cfg.method not in ("graph", "cluster", "both"):
        raise ValueError(f"unknown method {cfg.method!r} (expected graph, cluster, or both)")
    corpus = _load_corpus_from(cfg)
    if len(corpus) < 2:
        raise ValueError(f"grouping needs at least 2 issues, corpus has {len(corpus)}")
    provider = build_provider(cfg)
    embedding_set = embed_corpus(corpus, provider)
    matrix = similarity_matrix(embedding_set)
    working_groups = corpus.working_groups()

    artifacts: list[tuple[str, str]] = []
    summaries: list[str] = []

    if cfg.method in ("graph", "both"):
        grouping = group_by_graph(
            matrix, damping=cfg.damping, tol=cfg.pagerank_tol, max_iter=cfg.pagerank_max_iter
        )
        graph = build_1nn_graph(matrix)
        importance = {i: s for g in grouping.groups for i, s in g.importance.items()}
        artifacts.append(("grouping_graph.json", json.dumps(grouping.to_dict(), indent=2) + "\n"))
        artifacts.append(("graph.dot", to_dot(graph, importance, working_groups)))
        artifacts.append(("graph.graphml", to_graphml(graph, importance, working_groups)))
        summaries.append(f"graph method: {len(grouping.groups)} groups")

    if cfg.method in ("cluster", "both"):
        if cfg.coords_path:
            reduction = cluster_mod.load_reduced(cfg.coords_path, expected_ids=corpus.ids())
        else:
            reduction = cluster_mod.reduce_pca(embedding_set, stages=cfg.stages, seed=cfg.seed)
        labels = cluster_mod.hdbscan(
            reduction, min_cluster_size=cfg.min_cluster_size, min_samples=cfg.min_samples
        )
        grouping = cluster_mod.group_by_cluster(embedding_set, reduction, labels)
        artifacts.append(("grouping_cluster.json", json.dumps(grouping.to_dict(), indent=2) + "\n"))
        artifacts.append(("scatter.csv", scatter_csv(reduction, labels, working_groups)))
        summaries.append(
            f"cluster method: {len(grouping.groups)} groups, {len(grouping.noise)} noise"
        )

    if cfg.dump_matrix:
        artifacts.append(("matrix.csv", matrix_csv(matrix)))

    out = _outdir(cfg)
    for name, text in artifacts:
        atomic_write_text(out / name, text)
    for line in summaries:
        print(line)
    print(f"wrote {', '.join(name for name, _ in artifacts)} to {out}")
    return 0


def cmd_compare(grouping_a: str, grouping_b: str, out_dir: str) -> int:
    a = load_grouping(grouping_a)
    b = load_grouping(grouping_b)
    report = compare_mod.best_match_report(a, b)
    summary = compare_mod.summary_markdown(report, a, b)
    out = _outdir(out_dir)
    write_json(out / "overlap_report.json", report.to_dict())
    atomic_write_text(out / "histogram.csv", compare_mod.histogram_csv(report))
    atomic_write_text(out / "compare_summary.md", summary)
    print(summary, end="")
    return 0


def cmd_report(grouping_path: str, corpus_path: str, corpus_format: str | None, out_dir: str) -> int:
    grouping = load_grouping(grouping_path)
    corpus = load_corpus(corpus_path, corpus_format)
    text = render_report(grouping, corpus)
    out = _outdir(out_dir)
    atomic_write_text(out / "report.md", text)
    print(f"wrote {out / 'report.md'}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    n_topics = args.topics if args.topics is not None else len(sizes)
    corpus, labels = synth_corpus(
        n_topics, sizes, vocab_overlap=args.overlap, seed=args.seed or 0
    )
    out = _outdir(args.out or ".")
    fmt = args.format or "csv"
    corpus_file = out / f"corpus.{fmt}"
    write_corpus(corpus, corpus_file, fmt)
    write_json(out / "planted_labels.json", {"labels": labels})
    wgs = {issue.working_group for issue in corpus}
    print(f"wrote {len(corpus)} issues across {len(wgs)} working groups -> {corpus_file}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="issuegroups",
        description="Group expert-written issues by semantic similarity.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--seed", type=int, help="seed for synthetic data / bow provider")
        p.add_argument("--out", help="output directory (default: current)")

    def corpus_and_provider(p: argparse.ArgumentParser) -> None:
        p.add_argument("--corpus", help="corpus file (csv or json)")
        p.add_argument("--format", choices=["csv", "json"], help="corpus format if not inferable")
        p.add_argument("--provider", choices=["bow", "file", "http"], help="embedding provider")
        p.add_argument("--dim", type=int, help="bow provider dimension (default 768)")
        p.add_argument("--embeddings-file", help="file provider: embeddings JSON path")
        p.add_argument("--base-url", help="http provider: service base URL")
        p.add_argument("--model-name", help="http provider: required model name")
        p.add_argument("--timeout", type=float, help="http provider: request timeout seconds")
        p.add_argument("--batch-size", type=int, help="http provider: texts per request")

    p_embed = sub.add_parser("embed", help="embed a corpus and write embeddings JSON")
    common(p_embed)
    corpus_and_provider(p_embed)

    p_group = sub.add_parser("group", help="run the grouping pipelines and write outputs")
    common(p_group)
    corpus_and_provider(p_group)
    p_group.add_argument("--method", choices=["graph", "cluster", "both"], help="default both")
    p_group.add_argument("--stages", help="PCA stages, e.g. '15,2'")
    p_group.add_argument("--coords", help="use externally reduced coordinates JSON")
    p_group.add_argument("--min-cluster-size", type=int, help="hdbscan: smallest cluster")
    p_group.add_argument("--min-samples", type=int, help="hdbscan: core distance neighbor rank")
    p_group.add_argument("--damping", type=float, help="pagerank damping (default 0.85)")
    p_group.add_argument("--pr-tol", type=float, help="pagerank convergence tolerance")
    p_group.add_argument("--pr-max-iter", type=int, help="pagerank iteration cap")
    p_group.add_argument("--dump-matrix", action="store_true", help="also write matrix.csv")

    p_compare = sub.add_parser("compare", help="compare two grouping JSON files")
    p_compare.add_argument("grouping_a")
    p_compare.add_argument("grouping_b")
    p_compare.add_argument("--out", help="output directory (default: current)")

    p_report = sub.add_parser("report", help="render a markdown report for a grouping")
    p_report.add_argument("--grouping", required=True, help="grouping JSON path")
    p_report.add_argument("--corpus", required=True, help="corpus file the grouping refers to")
    p_report.add_argument("--format", choices=["csv", "json"])
    p_report.add_argument("--out", help="output directory (default: current)")

    p_synth = sub.add_parser("synth", help="generate a synthetic planted-topic corpus")
    p_synth.add_argument("--sizes", required=True, help="comma list of topic sizes, e.g. 23,9,4,8,5,9")
    p_synth.add_argument("--topics", type=int, help="topic count (default: len(sizes))")
    p_synth.add_argument("--overlap", type=float, default=0.1, help="shared-vocabulary fraction")
    p_synth.add_argument("--format", choices=["csv", "json"], help="corpus output format")
    common(p_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "embed":
            return cmd_embed(resolve_config(args))
        if args.command == "group":
            return cmd_group(resolve_config(args))
        if args.command == "compare":
            return cmd_compare(args.grouping_a, args.grouping_b, args.out or ".")
        if args.command == "report":
            return cmd_report(args.grouping, args.corpus, args.format, args.out or ".")
        if args.command == "synth":
            return cmd_synth(args)
        parser.error(f"unknown command {args.command!r}")
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"issuegroups {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
