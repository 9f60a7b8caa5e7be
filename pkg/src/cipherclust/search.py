"""Cluster abstracts, query-time pruning, and document ranking.

Each cluster is summarized by an abstract: its top-a tokens by total corpus
frequency. A query is scored against the abstracts to decide which clusters
are worth searching; documents in the surviving clusters are then ranked by
summed term frequency. Clusters and abstracts are immutable at query time,
so concurrent queries over shared snapshots are safe.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

from .clustering import ClusterSet
from .crypto import CipherToken, token_from_b64, token_to_b64
from .index import IndexDataError, Posting


@dataclass(frozen=True)
class Abstract:
    cluster_id: int
    entries: tuple[tuple[CipherToken, int], ...]  # (token, corpus frequency), highest first

    def frequency_of(self, token: CipherToken) -> int:
        for t, freq in self.entries:
            if t == token:
                return freq
        return 0


@dataclass(frozen=True)
class SearchResult:
    ranked: tuple[tuple[str, int], ...]  # (docId, score), best first
    clusters_searched: tuple[int, ...]


def build_abstracts(clusters: ClusterSet, a: int) -> list[Abstract]:
    """One abstract per cluster: the a highest-total-frequency tokens.

    Ties at the cutoff keep the lexicographically smaller ciphertext.
    """
    if a < 1:
        raise ValueError("abstract size must be >= 1")
    abstracts = []
    for cid, cluster in enumerate(clusters.clusters):
        scored = sorted(
            ((token, clusters.index.total_frequency(token)) for token in cluster.tokens),
            key=lambda kv: (-kv[1], kv[0]),
        )
        abstracts.append(Abstract(cluster_id=cid, entries=tuple(scored[:a])))
    return abstracts


def prune(query_tokens: Iterable[CipherToken], abstracts: list[Abstract], c: int) -> list[int]:
    """Top-c clusters whose abstracts overlap the query, by summed frequency.

    Clusters scoring zero are dropped; if every cluster scores zero the whole
    set is returned so the search can fall back to the full index.
    """
    if c < 1:
        raise ValueError("prune width must be >= 1")
    query = set(query_tokens)
    scored = []
    for abstract in abstracts:
        score = sum(freq for token, freq in abstract.entries if token in query)
        if score > 0:
            # min entry token is a relabeling-independent tie-break: cluster
            # token sets are disjoint, so it is unique per abstract
            scored.append((-score, min(t for t, _ in abstract.entries), abstract.cluster_id))
    if not scored:
        return [abstract.cluster_id for abstract in abstracts]
    scored.sort()
    return [cid for _, _, cid in scored[:c]]


def tf_score(token: CipherToken, posting: Posting) -> int:
    """Default document scorer: plain term frequency."""
    return posting.frequency


def search(
    query_tokens: Iterable[CipherToken],
    clusters: ClusterSet,
    selected: Iterable[int],
    cutoff: int,
    scorer: Callable[[CipherToken, Posting], int] = tf_score,
) -> SearchResult:
    """Rank documents of the selected clusters against the query tokens."""
    selected = tuple(selected)
    if not selected:
        raise ValueError("at least one cluster must be selected")
    query = set(query_tokens)
    scores: dict[str, int] = {}
    for cid in selected:
        cluster = clusters.clusters[cid]
        for token in cluster.tokens:
            if token not in query:
                continue
            for posting in clusters.index.entries[token]:
                scores[posting.doc] = scores.get(posting.doc, 0) + scorer(token, posting)
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))[:cutoff]
    return SearchResult(ranked=tuple(ranked), clusters_searched=selected)


def all_cluster_ids(clusters: ClusterSet) -> list[int]:
    return list(range(len(clusters.clusters)))


# ---------------------------------------------------------------------------
# abstracts file (JSON lines) and results TSV

def write_abstracts(abstracts: list[Abstract], path: str | Path) -> None:
    lines = []
    for abstract in abstracts:
        obj = {
            "cluster": abstract.cluster_id,
            "entries": [[token_to_b64(t), freq] for t, freq in abstract.entries],
        }
        lines.append(json.dumps(obj, separators=(",", ":")))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8", newline="\n")


def read_abstracts(path: str | Path) -> list[Abstract]:
    abstracts = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            entries = tuple((token_from_b64(t), int(f)) for t, f in obj["entries"])
            abstracts.append(Abstract(cluster_id=int(obj["cluster"]), entries=entries))
        except (ValueError, KeyError) as exc:
            raise IndexDataError(f"{path}:{lineno}: malformed abstract line: {exc}")
    return abstracts


def format_results(result: SearchResult) -> str:
    """TSV rendering: rank, docId, score."""
    lines = [f"{rank}\t{doc}\t{score}" for rank, (doc, score) in enumerate(result.ranked, 1)]
    return "\n".join(lines) + ("\n" if lines else "")
