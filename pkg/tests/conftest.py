from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from cipherclust import ingest
from cipherclust.config import CONFIG_ENV

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(autouse=True)
def _no_ambient_config(monkeypatch):
    monkeypatch.delenv(CONFIG_ENV, raising=False)

# Token-document frequencies of the five-token worked example used across
# the suite; token names double as their ciphertext bytes.
EXAMPLE_FREQS = {
    b"Uh5W": {"d1": 30, "d3": 23, "d4": 4, "d5": 40},
    b"/Vdn": {"d1": 5, "d4": 60, "d5": 34},
    b"oR1r": {"d2": 23, "d4": 30},
    b"vJHZ": {"d1": 52, "d2": 49, "d4": 23, "d6": 26},
    b"tH7c": {"d2": 45, "d3": 68, "d5": 3, "d6": 5},
}
EXAMPLE_DOCS = ("d1", "d2", "d3", "d4", "d5", "d6")


def records_from_freqs(freqs: dict[bytes, dict[str, int]], docs=None) -> list:
    """Doc-major records for ingest() from a token-major frequency map."""
    all_docs = set(docs or [])
    for by_doc in freqs.values():
        all_docs.update(by_doc)
    records = []
    for doc in sorted(all_docs):
        pairs = [(t, freqs[t][doc]) for t in sorted(freqs) if doc in freqs[t]]
        records.append((doc, pairs))
    return records


@pytest.fixture
def example_index():
    return ingest(records_from_freqs(EXAMPLE_FREQS, EXAMPLE_DOCS))


@pytest.fixture
def mini_corpus_dir() -> Path:
    return DATA_DIR / "mini_corpus"


@pytest.fixture
def embeddings_path() -> Path:
    return DATA_DIR / "synthetic_embeddings.txt"


@pytest.fixture
def queries_path() -> Path:
    return DATA_DIR / "queries.tsv"


@pytest.fixture
def judgments_path() -> Path:
    return DATA_DIR / "judgments.tsv"


def random_freqs(
    rng: np.random.Generator,
    n_tokens: int,
    n_docs: int,
    max_freq: int = 60,
    max_postings: int = 6,
) -> dict[bytes, dict[str, int]]:
    """Random sparse token-document frequencies; every token gets a posting."""
    docs = [f"d{j:04d}" for j in range(n_docs)]
    freqs: dict[bytes, dict[str, int]] = {}
    for i in range(n_tokens):
        prefix = bytes(rng.integers(33, 127, size=4).tolist())
        token = prefix + f"{i:04d}".encode()
        width = int(rng.integers(1, min(n_docs, max_postings) + 1))
        chosen = rng.choice(n_docs, size=width, replace=False)
        freqs[token] = {docs[j]: int(rng.integers(1, max_freq + 1)) for j in chosen}
    return freqs


def random_index(rng: np.random.Generator, n_tokens: int, n_docs: int, **kw):
    freqs = random_freqs(rng, n_tokens, n_docs, **kw)
    docs = [f"d{j:04d}" for j in range(n_docs)]
    return ingest(records_from_freqs(freqs, docs)), freqs
