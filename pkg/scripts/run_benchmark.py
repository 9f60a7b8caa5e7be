#!/usr/bin/env python3
"""Run benchmark queries against a clustered index, pruned and unpruned.

Writes a results TSV (queryId, rank, docId, score) suitable for
`cipherclust evaluate tsap`, plus a report JSON holding per-query TSAP@10
scores (when judgments are given) and pruned-vs-full search timings.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from cipherclust.clustering import read_clusters
from cipherclust.crypto import IdentityTokenCodec, KeyedTokenCodec, load_key
from cipherclust.evaluation import (
    EvaluationReport,
    load_judgments,
    load_queries,
    run_benchmark,
    tsap_at_10,
    write_results_file,
)
from cipherclust.index import index_digest
from cipherclust.search import read_abstracts


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--clusters", required=True)
    parser.add_argument("--abstracts", required=True)
    parser.add_argument("--queries", required=True)
    parser.add_argument("--judgments")
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--key")
    group.add_argument("--identity", action="store_true")
    parser.add_argument("--c", type=int, default=3, help="prune width")
    parser.add_argument("--top", type=int, default=10, help="result cutoff")
    parser.add_argument("--repeats", type=int, default=9)
    parser.add_argument("--out-results", default="results.tsv")
    parser.add_argument("--out-report", default="benchmark_report.json")
    args = parser.parse_args()

    codec = IdentityTokenCodec() if args.identity else KeyedTokenCodec(load_key(args.key))
    clusters = read_clusters(args.clusters)
    abstracts = read_abstracts(args.abstracts)
    queries = load_queries(args.queries)

    results, timings = run_benchmark(
        queries, clusters, abstracts, codec,
        prune_width=args.c, cutoff=args.top, repeats=args.repeats,
    )
    write_results_file(results, args.out_results)

    tsap = []
    if args.judgments:
        judgments = load_judgments(args.judgments)
        for query_id, result in results.items():
            docs = [doc for doc, _ in result.ranked]
            tsap.append((query_id, tsap_at_10(docs, judgments, query_id)))

    report = EvaluationReport(
        tsap_per_query=tsap,
        search_times=timings,
        corpus_sha256=index_digest(clusters.index),
    )
    report.save(args.out_report)

    for timing in timings:
        print(
            f"{timing.query_id}\tpruned={timing.pruned_ms:.4f}ms\t"
            f"full={timing.full_ms:.4f}ms\tclusters={timing.clusters_searched}"
        )
    if tsap:
        mean = sum(s for _, s in tsap) / len(tsap)
        print(f"mean TSAP@10 over {len(tsap)} queries: {mean:.4f}")
    print(f"wrote {args.out_results} and {args.out_report}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
