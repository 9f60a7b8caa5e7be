"""Encrypted central index: ingestion, trimming, and the on-disk TSV format.

The index is the system's source of truth: a map from encrypted token to a
posting list of (document id, frequency). Frequencies stay plaintext; only
token identities are ciphertext.
"""
from __future__ import annotations

import hashlib
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

from .crypto import CipherToken, TokenCodec, normalize_term, token_from_b64, token_to_b64


class IndexDataError(ValueError):
    """Malformed or inconsistent index input."""


class Posting(NamedTuple):
    doc: str
    frequency: int


# Characters that would break the TSV / posting-list syntax.
_BAD_DOC_CHARS = re.compile(r"[\t\n\r:,]")

_WORD = re.compile(r"[a-z0-9]+")

DEFAULT_STOPWORDS = frozenset(
    """a about above after again all also an and any are as at be because been
    before being below between both but by could did do does doing down during
    each few for from further had has have having he her here hers him his how
    i if in into is it its just me more most my no nor not of off on once only
    or other our out over own same she should so some such than that the their
    them then there these they this those through to too under until up very
    was we were what when where which while who whom why will with you your
    """.split()
)


@dataclass(frozen=True)
class CentralIndex:
    """Immutable token -> postings map plus the document universe.

    entries are keyed by ciphertext bytes; iteration helpers always walk
    tokens in byte order so every downstream artifact is reproducible.
    """

    entries: dict[CipherToken, tuple[Posting, ...]]
    docs: tuple[str, ...]

    @property
    def token_count(self) -> int:
        return len(self.entries)

    @property
    def doc_count(self) -> int:
        return len(self.docs)

    def tokens(self) -> list[CipherToken]:
        return sorted(self.entries)

    def postings(self, token: CipherToken) -> tuple[Posting, ...]:
        return self.entries[token]

    def doc_set(self, token: CipherToken) -> frozenset[str]:
        return frozenset(p.doc for p in self.entries[token])

    def total_frequency(self, token: CipherToken) -> int:
        return sum(p.frequency for p in self.entries[token])

    def triples(self) -> list[tuple[CipherToken, str, int]]:
        """All (token, doc, frequency) triples in canonical order."""
        out = []
        for token in self.tokens():
            for p in self.entries[token]:
                out.append((token, p.doc, p.frequency))
        return out


@dataclass(frozen=True)
class TrimmedIndex:
    """Partition of an index's tokens around the mean document co-occurrence.

    Only `kept` tokens enter matrix construction and center selection;
    excluded tokens rejoin at distribution time.
    """

    index: CentralIndex
    kept: tuple[CipherToken, ...]
    excluded: tuple[CipherToken, ...]
    mean_doc_cooccurrence: float

    @classmethod
    def keep_all(cls, index: CentralIndex) -> "TrimmedIndex":
        """A no-op trim: every token kept (used when trimming is not wanted)."""
        if index.token_count == 0:
            raise IndexDataError("cannot build a trimmed view of an empty index")
        counts = [len(index.entries[t]) for t in index.tokens()]
        mean = sum(counts) / len(counts)
        return cls(index, tuple(index.tokens()), (), mean)


def extract_keywords(
    document_text: str, n: int, stopwords: Iterable[str] = DEFAULT_STOPWORDS
) -> list[tuple[str, int]]:
    """Top-n non-stopword terms of a document by in-document frequency.

    Ties break lexicographically; the same n must be used for every
    document of a corpus.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    stop = {normalize_term(w) for w in stopwords}
    counts = Counter(t for t in _WORD.findall(document_text.lower()) if t not in stop)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:n]


def ingest(records: list[tuple[str, list[tuple[CipherToken, int]]]]) -> CentralIndex:
    """Build a CentralIndex from per-document (token, frequency) lists.

    Rejects duplicate document ids and any (token, doc) pair appearing with
    two different frequencies.
    """
    seen_docs: set[str] = set()
    acc: dict[CipherToken, dict[str, int]] = {}
    for doc_id, pairs in records:
        if not doc_id:
            raise IndexDataError("document id must be non-empty")
        if _BAD_DOC_CHARS.search(doc_id):
            raise IndexDataError(f"document id {doc_id!r} contains reserved characters")
        if doc_id in seen_docs:
            raise IndexDataError(f"duplicate document id {doc_id!r}")
        seen_docs.add(doc_id)
        for token, freq in pairs:
            if freq < 1:
                raise IndexDataError(f"frequency must be >= 1 for token in {doc_id!r}, got {freq}")
            by_doc = acc.setdefault(bytes(token), {})
            if doc_id in by_doc and by_doc[doc_id] != freq:
                raise IndexDataError(
                    f"conflicting frequencies for (token={token_to_b64(token)}, doc={doc_id!r}): "
                    f"{by_doc[doc_id]} vs {freq}"
                )
            by_doc[doc_id] = freq
    entries = {
        token: tuple(Posting(d, f) for d, f in sorted(by_doc.items()))
        for token, by_doc in sorted(acc.items())
    }
    return CentralIndex(entries=entries, docs=tuple(sorted(seen_docs)))


def doc_cooccurrence(index: CentralIndex, token: CipherToken) -> int:
    """Number of documents containing the token (its posting-list length)."""
    if token not in index.entries:
        raise KeyError(token)
    return len(index.entries[token])


def trim(index: CentralIndex) -> TrimmedIndex:
    """Keep tokens whose document count reaches the mean document count.

    The max-count token always survives, so `kept` is never empty.
    """
    if index.token_count == 0:
        raise IndexDataError("cannot trim an empty index")
    tokens = index.tokens()
    counts = {t: len(index.entries[t]) for t in tokens}
    mean = sum(counts.values()) / len(tokens)
    kept = tuple(t for t in tokens if counts[t] >= mean)
    excluded = tuple(t for t in tokens if counts[t] < mean)
    return TrimmedIndex(index=index, kept=kept, excluded=excluded, mean_doc_cooccurrence=mean)


# ---------------------------------------------------------------------------
# corpus / keyword-file ingestion

def build_index_from_corpus(
    corpus_dir: str | Path,
    codec: TokenCodec,
    n: int,
    stopwords: Iterable[str] = DEFAULT_STOPWORDS,
) -> CentralIndex:
    """Extract keywords from every *.txt file in a directory and ingest them.

    The file name (without extension) becomes the document id.
    """
    corpus = Path(corpus_dir)
    paths = sorted(p for p in corpus.iterdir() if p.is_file() and p.suffix == ".txt")
    if not paths:
        raise IndexDataError(f"no .txt documents found in {corpus}")
    records = []
    for path in paths:
        terms = extract_keywords(path.read_text(encoding="utf-8"), n, stopwords)
        pairs = [(codec.encrypt_token(term), freq) for term, freq in terms]
        records.append((path.stem, pairs))
    return ingest(records)


def read_keyword_file(path: str | Path) -> list[tuple[str, list[tuple[str, int]]]]:
    """Parse a pre-extracted keyword file: `docId<TAB>term:freq[,term:freq]*`."""
    records: list[tuple[str, list[tuple[str, int]]]] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            doc_id, rest = line.split("\t", 1)
        except ValueError:
            raise IndexDataError(f"{path}:{lineno}: expected `docId<TAB>term:freq,...`")
        pairs = []
        if rest.strip():
            for item in rest.split(","):
                term, sep, freq_s = item.rpartition(":")
                if not sep or not term:
                    raise IndexDataError(f"{path}:{lineno}: malformed pair {item!r}")
                if ":" in term or "," in term:
                    raise IndexDataError(f"{path}:{lineno}: term {term!r} contains reserved characters")
                pairs.append((normalize_term(term), int(freq_s)))
        records.append((doc_id, pairs))
    return records


def build_index_from_keywords(
    records: list[tuple[str, list[tuple[str, int]]]], codec: TokenCodec
) -> CentralIndex:
    encrypted = [
        (doc_id, [(codec.encrypt_token(term), freq) for term, freq in pairs])
        for doc_id, pairs in records
    ]
    return ingest(encrypted)


# ---------------------------------------------------------------------------
# index file format (TSV, UTF-8, LF)

def write_index(index: CentralIndex, path: str | Path) -> None:
    """One line per token: `<b64 token>\\t<docId>:<freq>[,<docId>:<freq>]*`."""
    lines = []
    for token in index.tokens():
        postings = ",".join(f"{p.doc}:{p.frequency}" for p in index.entries[token])
        lines.append(f"{token_to_b64(token)}\t{postings}")
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8", newline="\n")


def read_index(path: str | Path) -> CentralIndex:
    acc: dict[CipherToken, dict[str, int]] = {}
    docs: set[str] = set()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            token_s, rest = line.split("\t", 1)
            token = token_from_b64(token_s)
        except ValueError:
            raise IndexDataError(f"{path}:{lineno}: malformed index line")
        by_doc = acc.setdefault(token, {})
        for item in rest.split(","):
            doc_id, sep, freq_s = item.rpartition(":")
            if not sep or not doc_id:
                raise IndexDataError(f"{path}:{lineno}: malformed posting {item!r}")
            freq = int(freq_s)
            if freq < 1:
                raise IndexDataError(f"{path}:{lineno}: bad frequency in {item!r}")
            if doc_id in by_doc and by_doc[doc_id] != freq:
                raise IndexDataError(f"{path}:{lineno}: conflicting frequencies for {doc_id!r}")
            by_doc[doc_id] = freq
            docs.add(doc_id)
    entries = {
        token: tuple(Posting(d, f) for d, f in sorted(by_doc.items()))
        for token, by_doc in sorted(acc.items())
    }
    return CentralIndex(entries=entries, docs=tuple(sorted(docs)))


def index_digest(index: CentralIndex) -> str:
    """sha256 over the canonical (token, doc, frequency) triples."""
    h = hashlib.sha256()
    for token, doc, freq in index.triples():
        h.update(token_to_b64(token).encode("ascii"))
        h.update(b"\0")
        h.update(doc.encode("utf-8"))
        h.update(b"\0")
        h.update(str(freq).encode("ascii"))
        h.update(b"\n")
    return h.hexdigest()


def load_stopwords(path: str | Path) -> frozenset[str]:
    words = {normalize_term(w) for w in Path(path).read_text(encoding="utf-8").split()}
    return frozenset(w for w in words if w)
