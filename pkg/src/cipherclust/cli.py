"""Command-line front end.

Subcommands: build-index, estimate-k, cluster, abstracts, search, evaluate
(coherence | tsap | compare), pipeline. Stages talk to each other only
through the documented file formats, so any stage can be re-run or replaced
on its own.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import evaluation
from .clustering import choose_centers, cluster_index, distribute, read_clusters, write_clusters
from .config import PipelineConfig, load_config
from .crypto import (
    IdentityTokenCodec,
    KeyedTokenCodec,
    TokenCodec,
    encrypt_query,
    load_key,
)
from .index import (
    DEFAULT_STOPWORDS,
    build_index_from_corpus,
    build_index_from_keywords,
    load_stopwords,
    read_index,
    read_keyword_file,
    trim,
    write_index,
)
from .matrices import dump_matrices, estimate_k, matrix_pipeline
from .search import (
    all_cluster_ids,
    build_abstracts,
    format_results,
    prune,
    read_abstracts,
    search,
    write_abstracts,
)


class CLIError(ValueError):
    pass


def _resolve_codec(args, config: PipelineConfig | None = None) -> TokenCodec:
    if getattr(args, "identity", False):
        return IdentityTokenCodec()
    key_path = getattr(args, "key", None)
    if key_path:
        return KeyedTokenCodec(load_key(key_path))
    if config is not None and config.codec == "identity":
        return IdentityTokenCodec()
    raise CLIError("either --key <file> or --identity is required")


def _add_codec_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--key", metavar="PATH", help="key file: 32 raw bytes or 64 hex chars")
    group.add_argument(
        "--identity", action="store_true", help="identity codec (evaluation mode, readable tokens)"
    )


def _stopwords(args) -> frozenset[str]:
    if getattr(args, "stopwords", None):
        return load_stopwords(args.stopwords)
    return DEFAULT_STOPWORDS


def _file_sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _input_digest(path: Path) -> str:
    h = hashlib.sha256()
    if path.is_dir():
        for doc in sorted(p for p in path.iterdir() if p.is_file() and p.suffix == ".txt"):
            h.update(doc.name.encode("utf-8"))
            h.update(b"\0")
            h.update(doc.read_bytes())
            h.update(b"\0")
    else:
        h.update(path.read_bytes())
    return h.hexdigest()


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _build_index(args, config: PipelineConfig):
    codec = _resolve_codec(args, config)
    if args.corpus:
        return build_index_from_corpus(args.corpus, codec, config.keywords_per_doc, _stopwords(args))
    records = read_keyword_file(args.keywords)
    return build_index_from_keywords(records, codec)


def cmd_build_index(args) -> int:
    config = load_config(args.config, {"keywords_per_doc": args.n})
    index = _build_index(args, config)
    write_index(index, args.out)
    return 0


def cmd_estimate_k(args) -> int:
    index = read_index(args.index)
    trimmed = trim(index)
    mats = matrix_pipeline(trimmed)
    est = estimate_k(mats["C"])
    if args.dump_matrices:
        dump_matrices(mats, args.dump_matrices)
    print(f"m={est.m} trace={est.trace:.12g} k={est.k}")
    return 0


def cmd_cluster(args) -> int:
    index = read_index(args.index)
    k = "auto" if args.k == "auto" else int(args.k)
    clusters, _ = cluster_index(index, k=k)
    write_clusters(clusters, args.out)
    return 0


def cmd_abstracts(args) -> int:
    clusters = read_clusters(args.clusters)
    abstracts = build_abstracts(clusters, args.a)
    write_abstracts(abstracts, args.out)
    return 0


def cmd_search(args) -> int:
    clusters = read_clusters(args.clusters)
    codec = _resolve_codec(args)
    tokens = encrypt_query(codec, args.query)
    if args.no_prune:
        selected = all_cluster_ids(clusters)
    else:
        abstracts = read_abstracts(args.abstracts)
        selected = prune(tokens, abstracts, args.c)
    result = search(tokens, clusters, selected, args.top)
    sys.stdout.write(format_results(result))
    return 0


def cmd_evaluate_coherence(args) -> int:
    clusters = read_clusters(args.clusters)
    table = evaluation.load_embeddings(args.embeddings)
    report = evaluation.coherence_report(clusters, table)
    if args.out:
        report.save(args.out)
    else:
        _print_json(report.to_dict())
    return 0


def cmd_evaluate_tsap(args) -> int:
    ranked = evaluation.read_results_file(args.results)
    judgments = evaluation.load_judgments(args.judgments)
    report = evaluation.EvaluationReport(
        tsap_per_query=[(q, evaluation.tsap_at_10(docs, judgments, q)) for q, docs in ranked.items()]
    )
    if args.out:
        report.save(args.out)
    else:
        _print_json(report.to_dict())
    return 0


def cmd_evaluate_compare(args) -> int:
    dynamic = evaluation.EvaluationReport.load(args.dynamic)
    static = evaluation.EvaluationReport.load(args.static)
    comparison = evaluation.compare(dynamic, static)
    if args.out:
        _write_json(Path(args.out), comparison)
    else:
        _print_json(comparison)
    return 0


def cmd_pipeline(args) -> int:
    overrides = {
        "keywords_per_doc": args.n,
        "abstract_size": args.abstract_size,
        "prune_width": args.c,
        "cutoff": args.top,
        "k_mode": ("auto" if args.k == "auto" else int(args.k)) if args.k else None,
        "codec": "identity" if args.identity else ("keyed" if args.key else None),
    }
    config = load_config(args.config, overrides)
    if config.codec == "keyed" and not args.key:
        raise CLIError("codec 'keyed' needs --key <file>")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    input_path = Path(args.corpus or args.keywords)
    if not input_path.exists():
        raise CLIError(f"input path {input_path} does not exist")

    index = _build_index(args, config)
    index_path = out_dir / "index.tsv"
    write_index(index, index_path)

    trimmed = trim(index)
    mats = matrix_pipeline(trimmed)
    est = estimate_k(mats["C"])
    k_target = est.k if config.k_mode == "auto" else int(config.k_mode)

    centers = choose_centers(k_target, mats["C"], index)
    clusters = distribute(index, centers, k_requested=k_target)
    clusters_path = out_dir / "clusters.jsonl"
    write_clusters(clusters, clusters_path)

    abstracts = build_abstracts(clusters, config.abstract_size)
    abstracts_path = out_dir / "abstracts.jsonl"
    write_abstracts(abstracts, abstracts_path)

    k_report = {
        "m": est.m,
        "trace": est.trace,
        "k_estimate": est.k,
        "k_mode": config.k_mode,
        "k_target": k_target,
        "k_used": clusters.k_used,
    }
    k_report_path = out_dir / "k_report.json"
    _write_json(k_report_path, k_report)

    _validate_artifacts(index, index_path, clusters_path, abstracts_path, config)

    manifest = {
        "config": config.to_dict(),
        "input": {"path": str(args.corpus or args.keywords), "sha256": _input_digest(input_path)},
        "artifacts": {
            p.name: _file_sha256(p) for p in (index_path, k_report_path, clusters_path, abstracts_path)
        },
        "k": k_report,
    }
    _write_json(out_dir / "manifest.json", manifest)
    return 0


def _validate_artifacts(index, index_path, clusters_path, abstracts_path, config) -> None:
    """Re-read every artifact and check its format invariants."""
    reread = read_index(index_path)
    if reread.triples() != index.triples():
        raise CLIError("index file round-trip mismatch")
    clusters = read_clusters(clusters_path)
    tokens = clusters.all_tokens()
    if len(tokens) != len(set(tokens)) or set(tokens) != set(index.entries):
        raise CLIError("clusters file does not partition the index tokens")
    abstracts = read_abstracts(abstracts_path)
    if len(abstracts) != clusters.k_used:
        raise CLIError("abstract count does not match cluster count")
    for abstract in abstracts:
        if len(abstract.entries) > config.abstract_size:
            raise CLIError("abstract exceeds the configured size")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cipherclust",
        description="Cluster an encrypted keyword index and search it with cluster pruning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-index", help="extract keywords and build the encrypted index")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--corpus", metavar="DIR", help="directory of .txt documents")
    src.add_argument("--keywords", metavar="FILE", help="pre-extracted keyword TSV")
    _add_codec_flags(p)
    p.add_argument("--out", required=True, metavar="FILE")
    p.add_argument("--n", type=int, default=None, help="keywords per document")
    p.add_argument("--stopwords", metavar="FILE")
    p.add_argument("--config", metavar="FILE")
    p.set_defaults(func=cmd_build_index)

    p = sub.add_parser("estimate-k", help="estimate the cluster count from an index")
    p.add_argument("--index", required=True, metavar="FILE")
    p.add_argument("--dump-matrices", metavar="DIR")
    p.set_defaults(func=cmd_estimate_k)

    p = sub.add_parser("cluster", help="select centers and distribute tokens")
    p.add_argument("--index", required=True, metavar="FILE")
    p.add_argument("--k", default="auto", help="'auto' or a positive integer")
    p.add_argument("--out", required=True, metavar="FILE")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("abstracts", help="build per-cluster abstracts")
    p.add_argument("--clusters", required=True, metavar="FILE")
    p.add_argument("--a", type=int, default=100, help="tokens per abstract")
    p.add_argument("--out", required=True, metavar="FILE")
    p.set_defaults(func=cmd_abstracts)

    p = sub.add_parser("search", help="run one query against the clustered index")
    p.add_argument("--query", required=True)
    p.add_argument("--clusters", required=True, metavar="FILE")
    p.add_argument("--abstracts", metavar="FILE")
    _add_codec_flags(p)
    p.add_argument("--c", type=int, default=3, help="prune width")
    p.add_argument("--top", type=int, default=10, help="result cutoff")
    p.add_argument("--no-prune", action="store_true", help="search every cluster")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("evaluate", help="evaluation harness")
    esub = p.add_subparsers(dest="evaluate_command", required=True)

    pe = esub.add_parser("coherence", help="embedding-based cluster coherency")
    pe.add_argument("--clusters", required=True, metavar="FILE")
    pe.add_argument("--embeddings", required=True, metavar="FILE")
    pe.add_argument("--out", metavar="FILE")
    pe.set_defaults(func=cmd_evaluate_coherence)

    pe = esub.add_parser("tsap", help="TSAP@10 relevance scores")
    pe.add_argument("--results", required=True, metavar="FILE")
    pe.add_argument("--judgments", required=True, metavar="FILE")
    pe.add_argument("--out", metavar="FILE")
    pe.set_defaults(func=cmd_evaluate_tsap)

    pe = esub.add_parser("compare", help="dynamic-k vs static-k coherency")
    pe.add_argument("--dynamic", required=True, metavar="FILE")
    pe.add_argument("--static", required=True, metavar="FILE")
    pe.add_argument("--out", metavar="FILE")
    pe.set_defaults(func=cmd_evaluate_compare)

    p = sub.add_parser("pipeline", help="run the whole pipeline and write a manifest")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--corpus", metavar="DIR")
    src.add_argument("--keywords", metavar="FILE")
    _add_codec_flags(p)
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--k", default=None, help="'auto' or a positive integer")
    p.add_argument("--n", type=int, default=None, help="keywords per document")
    p.add_argument("--abstract-size", type=int, default=None)
    p.add_argument("--c", type=int, default=None, help="prune width")
    p.add_argument("--top", type=int, default=None, help="result cutoff")
    p.add_argument("--stopwords", metavar="FILE")
    p.add_argument("--config", metavar="FILE")
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "search" and not args.no_prune and not args.abstracts:
        parser.error("search needs --abstracts unless --no-prune is given")
    try:
        return args.func(args)
    except (ValueError, LookupError, OSError) as exc:
        # every domain error (config, crypto, index, matrix, clustering,
        # evaluation) is a ValueError subclass
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
