#!/usr/bin/env python3
"""Dynamic-k versus fixed-k clustering, scored by embedding coherence.

Builds an identity-codec index from a corpus, clusters it once with the
trace estimate and once with a fixed k (default 10), and writes both
coherence reports plus the comparison summary.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from cipherclust.clustering import cluster_index
from cipherclust.crypto import IdentityTokenCodec
from cipherclust.evaluation import coherence_report, compare, load_embeddings, static_baseline
from cipherclust.index import build_index_from_corpus


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--corpus", required=True, help="directory of .txt documents")
    parser.add_argument("--embeddings", required=True)
    parser.add_argument("--static-k", type=int, default=10)
    parser.add_argument("--n", type=int, default=20, help="keywords per document")
    parser.add_argument("--out-dir", default=".")
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    index = build_index_from_corpus(args.corpus, IdentityTokenCodec(), n=args.n)
    table = load_embeddings(args.embeddings)

    dynamic, estimate = cluster_index(index, k="auto")
    static = static_baseline(index, args.static_k)

    dynamic_report = coherence_report(dynamic, table)
    static_report = coherence_report(static, table)
    dynamic_report.save(out / "dynamic_report.json")
    static_report.save(out / "static_report.json")

    summary = compare(dynamic_report, static_report)
    summary["k_estimate"] = estimate.k if estimate else None
    summary["k_used_dynamic"] = dynamic.k_used
    summary["k_used_static"] = static.k_used
    (out / "comparison.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n"
    )
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
