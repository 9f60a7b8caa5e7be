"""Center selection and token distribution.

Centers are picked in one pass over tokens sorted by document-association
degree: a token whose uniqueness (new documents vs already-covered ones)
exceeds 1 becomes a candidate, scored by centrality; the top-k candidates
win. There is no iterative center shifting. Remaining tokens are then
assigned to the center with the highest relatedness, a contribution-weighted
log co-occurrence score that only needs frequencies, never plaintext.

Center selection is inherently sequential (the coverage set evolves);
distribution reads immutable inputs only, so callers may shard tokens across
workers using the pure relatedness function.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse

from .crypto import CipherToken, token_from_b64, token_to_b64
from .index import CentralIndex, IndexDataError, Posting, trim
from .matrices import KEstimate, LabeledMatrix, MatrixRole, estimate_k, matrix_pipeline, separation_factors


class ClusteringError(ValueError):
    pass


def uniqueness(token: CipherToken, covered: set[str] | frozenset[str], index: CentralIndex) -> float:
    """|A_i - U| / |A_i ^ U| for the token's document set A_i.

    +inf when nothing of A_i is covered yet (always eligible), 0 when A_i is
    fully covered.
    """
    if token not in index.entries:
        raise KeyError(token)
    docs = index.doc_set(token)
    outside = len(docs - covered)
    inside = len(docs & covered)
    if outside == 0:
        return 0.0
    if inside == 0:
        return math.inf
    return outside / inside


def centrality(omega: float, c_ii: float) -> float:
    """omega * c_ii * (1 - c_ii), with inf * 0 defined as 0."""
    spread = c_ii * (1.0 - c_ii)
    if math.isinf(omega):
        return math.inf if spread > 0.0 else 0.0
    return omega * spread


def choose_centers(k: int, c: LabeledMatrix, index: CentralIndex) -> list[CipherToken]:
    """Single-pass center selection over the C matrix's tokens.

    Tokens are visited in descending document-association order (ties by
    ciphertext bytes). A token with uniqueness > 1 is admitted: its documents
    merge into the coverage set and its centrality is recorded. The at-most-k
    admitted tokens with the highest centrality are returned; infinite
    centralities outrank all finite ones and tie-break by higher degree,
    then ciphertext bytes.
    """
    if k < 1:
        raise ClusteringError(f"k must be >= 1, got {k}")
    if c.role is not MatrixRole.C_TOKEN_TO_TOKEN:
        raise ClusteringError("center selection needs the token-to-token matrix")
    sep = separation_factors(c)
    degree = {t: len(index.entries[t]) for t in sep}
    order = sorted(sep, key=lambda t: (-degree[t], t))

    covered: set[str] = set()
    admitted: list[tuple[CipherToken, float]] = []
    for token in order:
        omega = uniqueness(token, covered, index)
        if omega > 1.0:
            covered |= index.doc_set(token)
            admitted.append((token, centrality(omega, sep[token])))

    def rank(entry: tuple[CipherToken, float]):
        token, phi = entry
        if math.isinf(phi):
            return (0, -degree[token], token)
        return (1, -phi, token)

    admitted.sort(key=rank)
    return [token for token, _ in admitted[:k]]


def contribution(token: CipherToken, doc: str, index: CentralIndex) -> float:
    """Share of the token's corpus frequency contributed by one document."""
    if token not in index.entries:
        raise KeyError(token)
    freq = next((p.frequency for p in index.entries[token] if p.doc == doc), 0)
    if freq == 0:
        return 0.0
    return freq / index.total_frequency(token)


def cooccurrence(token: CipherToken, doc: str, center: CipherToken, index: CentralIndex) -> float:
    """Joint in-document frequency share of a token and a center."""
    if token not in index.entries:
        raise KeyError(token)
    if center not in index.entries:
        raise KeyError(center)
    f_t = next((p.frequency for p in index.entries[token] if p.doc == doc), 0)
    f_c = next((p.frequency for p in index.entries[center] if p.doc == doc), 0)
    if f_t + f_c == 0:
        return 0.0
    return (f_t + f_c) / (index.total_frequency(token) + index.total_frequency(center))


def relatedness(center: CipherToken, token: CipherToken, index: CentralIndex) -> float:
    """Sum over the token's documents of contribution * log(co-occurrence).

    Non-positive; closer to zero means more related. fsum keeps the result
    independent of document enumeration order.
    """
    if token not in index.entries:
        raise KeyError(token)
    if center not in index.entries:
        raise KeyError(center)
    total = index.total_frequency(token) + index.total_frequency(center)
    center_freq = {p.doc: p.frequency for p in index.entries[center]}
    token_total = index.total_frequency(token)
    terms = []
    for p in index.entries[token]:
        kappa = p.frequency / token_total
        rho = (p.frequency + center_freq.get(p.doc, 0)) / total
        terms.append(kappa * math.log(rho))
    return math.fsum(terms)


@dataclass(frozen=True)
class Cluster:
    center: CipherToken
    tokens: tuple[CipherToken, ...]  # byte-sorted, includes the center


@dataclass(frozen=True)
class ClusterSet:
    """k_used clusters whose token union equals the distributed index."""

    clusters: tuple[Cluster, ...]
    index: CentralIndex
    k_requested: int

    @property
    def k_used(self) -> int:
        return len(self.clusters)

    def all_tokens(self) -> list[CipherToken]:
        out: list[CipherToken] = []
        for cluster in self.clusters:
            out.extend(cluster.tokens)
        return out


def distribute(index: CentralIndex, centers: list[CipherToken], k_requested: int | None = None) -> ClusterSet:
    """Assign every non-center token of the index to its most related center.

    Ties break toward the lexicographically smaller center ciphertext.
    Summation order inside each score is canonicalized so relabeled but
    otherwise identical inputs produce identical assignments.
    """
    if not centers:
        raise ClusteringError("at least one center is required")
    if len(set(centers)) != len(centers):
        raise ClusteringError("centers must be pairwise distinct")
    for center in centers:
        if center not in index.entries:
            raise ClusteringError(f"center {token_to_b64(center)} is not in the index")

    tokens = index.tokens()
    docs = list(index.docs)
    doc_pos = {d: j for j, d in enumerate(docs)}
    center_list = sorted(centers)
    center_set = set(center_list)

    # frequency matrix over the full index
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for token in tokens:
        for p in index.entries[token]:
            indices.append(doc_pos[p.doc])
            data.append(float(p.frequency))
        indptr.append(len(indices))
    freq = sparse.csr_matrix(
        (np.array(data), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
        shape=(len(tokens), len(docs)),
    )
    totals = np.asarray(freq.sum(axis=1)).ravel()

    token_pos = {t: i for i, t in enumerate(tokens)}
    center_rows = np.array([token_pos[c] for c in center_list], dtype=np.int64)
    center_dense = freq[center_rows].toarray()
    center_totals = totals[center_rows]

    members: dict[CipherToken, list[CipherToken]] = {c: [] for c in center_list}
    for i, token in enumerate(tokens):
        if token in center_set:
            continue
        lo, hi = freq.indptr[i], freq.indptr[i + 1]
        cols = freq.indices[lo:hi]
        f = freq.data[lo:hi]
        kappa = f / totals[i]
        rho = (f[None, :] + center_dense[:, cols]) / (totals[i] + center_totals)[:, None]
        terms = kappa[None, :] * np.log(rho)
        scores = np.sum(np.sort(terms, axis=1), axis=1)
        best = scores.max()
        winner = min(center_list[j] for j in np.flatnonzero(scores == best))
        members[winner].append(token)

    clusters = tuple(
        Cluster(center=c, tokens=tuple(sorted([c] + members[c]))) for c in center_list
    )
    return ClusterSet(clusters=clusters, index=index, k_requested=k_requested or len(centers))


def cluster_index(index: CentralIndex, k: int | str = "auto") -> tuple[ClusterSet, KEstimate | None]:
    """Full clustering pass: trim, build matrices, pick centers, distribute.

    k may be a positive integer or "auto" to use the trace estimate. The
    estimate is only computed on the auto path.
    """
    trimmed = trim(index)
    mats = matrix_pipeline(trimmed)
    estimate: KEstimate | None = None
    if k == "auto":
        estimate = estimate_k(mats["C"])
        k_target = estimate.k
    else:
        k_target = int(k)
        if k_target < 1:
            raise ClusteringError(f"k must be >= 1, got {k_target}")
    centers = choose_centers(k_target, mats["C"], index)
    return distribute(index, centers, k_requested=k_target), estimate


# ---------------------------------------------------------------------------
# clusters file (JSON lines, UTF-8, LF)

def write_clusters(cluster_set: ClusterSet, path: str | Path) -> None:
    """One JSON object per cluster, ordered by id; tokens carry postings."""
    lines = []
    for cid, cluster in enumerate(cluster_set.clusters):
        tokens_payload = [
            {
                "t": token_to_b64(token),
                "postings": [[p.doc, p.frequency] for p in cluster_set.index.entries[token]],
            }
            for token in cluster.tokens
        ]
        obj = {"id": cid, "center": token_to_b64(cluster.center), "tokens": tokens_payload}
        lines.append(json.dumps(obj, separators=(",", ":")))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8", newline="\n")


def read_clusters(path: str | Path) -> ClusterSet:
    """Rebuild a ClusterSet (and its distributed index) from a clusters file.

    The requested k is not stored in the file; k_requested is set to the
    cluster count actually present.
    """
    clusters: list[Cluster] = []
    acc: dict[CipherToken, dict[str, int]] = {}
    docs: set[str] = set()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            center = token_from_b64(obj["center"])
            token_objs = obj["tokens"]
        except (ValueError, KeyError) as exc:
            raise IndexDataError(f"{path}:{lineno}: malformed cluster line: {exc}")
        if len(clusters) != int(obj["id"]):
            raise IndexDataError(f"{path}:{lineno}: cluster ids must be 0,1,2,... in order")
        tokens = []
        for entry in token_objs:
            token = token_from_b64(entry["t"])
            tokens.append(token)
            by_doc = acc.setdefault(token, {})
            for doc_id, freq in entry["postings"]:
                by_doc[str(doc_id)] = int(freq)
                docs.add(str(doc_id))
        clusters.append(Cluster(center=center, tokens=tuple(sorted(tokens))))
    entries = {
        token: tuple(Posting(d, f) for d, f in sorted(by_doc.items()))
        for token, by_doc in sorted(acc.items())
    }
    index = CentralIndex(entries=entries, docs=tuple(sorted(docs)))
    return ClusterSet(clusters=tuple(clusters), index=index, k_requested=len(clusters))
