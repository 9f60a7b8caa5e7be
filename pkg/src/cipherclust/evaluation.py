"""Evaluation harness: cluster coherence, TSAP@10 relevance, search timing.

Coherence needs readable tokens, so it only applies to indexes built with
the identity codec; the clustering code path itself is unchanged either way.
"""
from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .clustering import ClusterSet, cluster_index
from .crypto import TokenCodec, encrypt_query
from .index import CentralIndex, index_digest
from .search import Abstract, SearchResult, all_cluster_ids, prune, search

TSAP_CUTOFF = 10
GRADES = (0, 1, 2)


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class EmbeddingTable:
    """Word -> vector map with a single declared dimension."""

    dimension: int
    vectors: dict[str, np.ndarray]
    digest: str | None = None

    def __contains__(self, word: str) -> bool:
        return word in self.vectors


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Parse the plain-text `word v1 ... vd` format; dimension must be uniform."""
    raw = Path(path).read_bytes()
    vectors: dict[str, np.ndarray] = {}
    dimension: int | None = None
    for lineno, line in enumerate(raw.decode("utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split()
        word = parts[0].lower()
        vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
        if dimension is None:
            dimension = vec.size
            if dimension == 0:
                raise EvaluationError(f"{path}:{lineno}: vector has no components")
        elif vec.size != dimension:
            raise EvaluationError(
                f"{path}:{lineno}: dimension mismatch ({vec.size} != {dimension})"
            )
        vectors[word] = vec
    if dimension is None:
        raise EvaluationError(f"{path}: empty embedding table")
    return EmbeddingTable(
        dimension=dimension, vectors=vectors, digest=hashlib.sha256(raw).hexdigest()
    )


def cluster_coherence(words: Iterable[str], table: EmbeddingTable) -> float | None:
    """Mean cosine similarity over all unordered pairs of embeddable words.

    Words missing from the table (or with zero vectors) are skipped; fewer
    than two embeddable words means the cluster is not scorable (None).
    """
    vecs = []
    for word in words:
        v = table.vectors.get(word)
        if v is None:
            continue
        norm = np.linalg.norm(v)
        if norm == 0.0:
            continue
        vecs.append(v / norm)
    n = len(vecs)
    if n < 2:
        return None
    unit = np.stack(vecs)
    gram = unit @ unit.T
    total = float(gram.sum() - np.trace(gram))  # off-diagonal sum, both triangles
    return total / (n * (n - 1))


@dataclass(frozen=True)
class ClusterCoherence:
    cluster_id: int
    coherence: float | None
    embeddable_tokens: int
    skipped_tokens: int


@dataclass(frozen=True)
class SearchTiming:
    """Per-query latency: searching the pruned cluster subset vs all clusters.

    Pruning itself happens on the client tier against the small abstracts;
    its cost is reported separately as prune_ms and is not part of the
    pruned-vs-full search comparison.
    """

    query_id: str
    pruned_ms: float
    full_ms: float
    prune_ms: float
    clusters_searched: int


@dataclass
class EvaluationReport:
    per_cluster: list[ClusterCoherence] = field(default_factory=list)
    overall: float | None = None
    tsap_per_query: list[tuple[str, float]] = field(default_factory=list)
    search_times: list[SearchTiming] = field(default_factory=list)
    corpus_sha256: str | None = None
    embeddings_sha256: str | None = None

    def to_dict(self) -> dict:
        return {
            "per_cluster": [
                {
                    "cluster": c.cluster_id,
                    "coherence": c.coherence,
                    "embeddable_tokens": c.embeddable_tokens,
                    "skipped_tokens": c.skipped_tokens,
                }
                for c in self.per_cluster
            ],
            "overall": self.overall,
            "tsap_per_query": [{"query": q, "score": s} for q, s in self.tsap_per_query],
            "search_times": [
                {
                    "query": t.query_id,
                    "pruned_ms": t.pruned_ms,
                    "full_ms": t.full_ms,
                    "prune_ms": t.prune_ms,
                    "clusters_searched": t.clusters_searched,
                }
                for t in self.search_times
            ],
            "corpus_sha256": self.corpus_sha256,
            "embeddings_sha256": self.embeddings_sha256,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
            newline="\n",
        )

    @classmethod
    def from_dict(cls, obj: dict) -> "EvaluationReport":
        return cls(
            per_cluster=[
                ClusterCoherence(
                    cluster_id=int(c["cluster"]),
                    coherence=c["coherence"],
                    embeddable_tokens=int(c.get("embeddable_tokens", 0)),
                    skipped_tokens=int(c.get("skipped_tokens", 0)),
                )
                for c in obj.get("per_cluster", [])
            ],
            overall=obj.get("overall"),
            tsap_per_query=[(r["query"], float(r["score"])) for r in obj.get("tsap_per_query", [])],
            search_times=[
                SearchTiming(
                    query_id=t["query"],
                    pruned_ms=float(t["pruned_ms"]),
                    full_ms=float(t["full_ms"]),
                    prune_ms=float(t.get("prune_ms", 0.0)),
                    clusters_searched=int(t.get("clusters_searched", 0)),
                )
                for t in obj.get("search_times", [])
            ],
            corpus_sha256=obj.get("corpus_sha256"),
            embeddings_sha256=obj.get("embeddings_sha256"),
        )

    @classmethod
    def load(cls, path: str | Path) -> "EvaluationReport":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def coherence_report(clusters: ClusterSet, table: EmbeddingTable) -> EvaluationReport:
    """Score every cluster of an identity-codec ClusterSet against the table.

    Overall coherency is the mean over scorable clusters (>= 2 embeddable
    tokens); non-scorable clusters are reported but excluded from the mean.
    """
    per_cluster = []
    scorable = []
    for cid, cluster in enumerate(clusters.clusters):
        try:
            words = [token.decode("utf-8") for token in cluster.tokens]
        except UnicodeDecodeError:
            raise EvaluationError(
                "cluster tokens are not readable text; coherence needs an "
                "identity-codec index"
            )
        embeddable = sum(1 for w in words if w in table.vectors)
        coherence = cluster_coherence(words, table)
        per_cluster.append(
            ClusterCoherence(
                cluster_id=cid,
                coherence=coherence,
                embeddable_tokens=embeddable,
                skipped_tokens=len(words) - embeddable,
            )
        )
        if coherence is not None:
            scorable.append(coherence)
    overall = (math.fsum(scorable) / len(scorable)) if scorable else None
    return EvaluationReport(
        per_cluster=per_cluster,
        overall=overall,
        corpus_sha256=index_digest(clusters.index),
        embeddings_sha256=table.digest,
    )


def tsap_at_10(ranked: list[str], judgments: dict[tuple[str, str], int], query_id: str) -> float:
    """TREC-style average precision at cutoff 10.

    Rank i contributes 1/i when judged relevant (grade 2), 1/(2i) when
    partially relevant (grade 1), 0 otherwise; the sum is divided by 10.
    Absent ranks contribute nothing.
    """
    if len(ranked) > TSAP_CUTOFF:
        raise EvaluationError(f"ranked list longer than cutoff {TSAP_CUTOFF}")
    total = 0.0
    for i, doc in enumerate(ranked, 1):
        grade = judgments.get((query_id, doc), 0)
        if grade == 2:
            total += 1.0 / i
        elif grade == 1:
            total += 1.0 / (2 * i)
    return total / TSAP_CUTOFF


def static_baseline(index: CentralIndex, k_fixed: int) -> ClusterSet:
    """Cluster with a predetermined k instead of the trace estimate."""
    if k_fixed < 1:
        raise EvaluationError(f"fixed k must be >= 1, got {k_fixed}")
    clusters, _ = cluster_index(index, k=k_fixed)
    return clusters


def compare(dynamic: EvaluationReport, static: EvaluationReport) -> dict:
    """Overall coherency of both strategies plus relative improvement.

    The comparison is undefined (improvement None) when either side is
    non-scorable or the static overall is zero.
    """
    if (
        dynamic.corpus_sha256
        and static.corpus_sha256
        and dynamic.corpus_sha256 != static.corpus_sha256
    ):
        raise EvaluationError("reports were built over different corpora")
    if (
        dynamic.embeddings_sha256
        and static.embeddings_sha256
        and dynamic.embeddings_sha256 != static.embeddings_sha256
    ):
        raise EvaluationError("reports were built with different embedding tables")
    flags = []
    improvement = None
    if dynamic.overall is None or static.overall is None or static.overall == 0.0:
        flags.append("comparison_undefined")
    else:
        improvement = (dynamic.overall - static.overall) / abs(static.overall) * 100.0
        if dynamic.overall < static.overall:
            flags.append("dynamic_below_static")
    return {
        "dynamic_overall": dynamic.overall,
        "static_overall": static.overall,
        "improvement_pct": improvement,
        "flags": flags,
    }


# ---------------------------------------------------------------------------
# judgments / queries / results files

def load_judgments(path: str | Path) -> dict[tuple[str, str], int]:
    """TSV `queryId<TAB>docId<TAB>grade`, one grade per (query, doc)."""
    judgments: dict[tuple[str, str], int] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise EvaluationError(f"{path}:{lineno}: expected queryId<TAB>docId<TAB>grade")
        query_id, doc_id, grade_s = parts
        grade = int(grade_s)
        if grade not in GRADES:
            raise EvaluationError(f"{path}:{lineno}: grade must be one of {GRADES}")
        key = (query_id, doc_id)
        if key in judgments and judgments[key] != grade:
            raise EvaluationError(f"{path}:{lineno}: conflicting grades for {key}")
        judgments[key] = grade
    return judgments


def load_queries(path: str | Path) -> list[tuple[str, str]]:
    """TSV `queryId<TAB>query text`."""
    queries = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise EvaluationError(f"{path}:{lineno}: expected queryId<TAB>query text")
        queries.append((parts[0], parts[1]))
    return queries


def write_results_file(results: dict[str, SearchResult], path: str | Path) -> None:
    """TSV `queryId<TAB>rank<TAB>docId<TAB>score`, queries in input order."""
    lines = []
    for query_id, result in results.items():
        for rank, (doc, score) in enumerate(result.ranked, 1):
            lines.append(f"{query_id}\t{rank}\t{doc}\t{score}")
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8", newline="\n")


def read_results_file(path: str | Path) -> dict[str, list[str]]:
    """Ranked doc ids per query, in rank order."""
    ranked: dict[str, list[tuple[int, str]]] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise EvaluationError(f"{path}:{lineno}: expected queryId, rank, docId, score")
        ranked.setdefault(parts[0], []).append((int(parts[1]), parts[2]))
    return {q: [doc for _, doc in sorted(rows)] for q, rows in ranked.items()}


# ---------------------------------------------------------------------------
# benchmark runner: pruned vs whole-index search with monotonic timing

def run_benchmark(
    queries: list[tuple[str, str]],
    clusters: ClusterSet,
    abstracts: list[Abstract],
    codec: TokenCodec,
    prune_width: int,
    cutoff: int,
    repeats: int = 9,
) -> tuple[dict[str, SearchResult], list[SearchTiming]]:
    """Search every benchmark query both pruned and unpruned.

    Each path is timed as the best of `repeats` monotonic-clock runs to damp
    scheduler noise at desk scale.
    """
    if repeats < 1:
        raise EvaluationError("repeats must be >= 1")
    full_ids = all_cluster_ids(clusters)
    results: dict[str, SearchResult] = {}
    timings: list[SearchTiming] = []
    for query_id, text in queries:
        tokens = encrypt_query(codec, text)
        pruned_best = math.inf
        full_best = math.inf
        prune_best = math.inf
        result = None
        for _ in range(repeats):
            start = time.perf_counter_ns()
            selected = prune(tokens, abstracts, prune_width)
            prune_best = min(prune_best, time.perf_counter_ns() - start)
            start = time.perf_counter_ns()
            result = search(tokens, clusters, selected, cutoff)
            pruned_best = min(pruned_best, time.perf_counter_ns() - start)
            start = time.perf_counter_ns()
            search(tokens, clusters, full_ids, cutoff)
            full_best = min(full_best, time.perf_counter_ns() - start)
        assert result is not None
        results[query_id] = result
        timings.append(
            SearchTiming(
                query_id=query_id,
                pruned_ms=pruned_best / 1e6,
                full_ms=full_best / 1e6,
                prune_ms=prune_best / 1e6,
                clusters_searched=len(result.clusters_searched),
            )
        )
    return results, timings
