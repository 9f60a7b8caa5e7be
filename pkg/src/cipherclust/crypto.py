"""Deterministic token encryption.

Equal plaintexts must map to equal ciphertexts so that exact-match lookups
work over the encrypted index. Two codecs are provided: a keyed PRF that
emits fixed-width tags, and an identity codec that leaves tokens readable
for embedding-based evaluation runs.
"""
from __future__ import annotations

import base64
import hashlib
import hmac
from dataclasses import dataclass
from pathlib import Path

# Encrypted tokens are raw bytes throughout; files render them base64.
CipherToken = bytes

KEY_BYTES = 32
TAG_BYTES = 16


class CryptoError(ValueError):
    pass


@dataclass(frozen=True)
class SecretKey:
    """256-bit key material. Never serialized into any output artifact."""

    data: bytes

    def __post_init__(self) -> None:
        if len(self.data) != KEY_BYTES:
            raise CryptoError(f"secret key must be {KEY_BYTES} bytes, got {len(self.data)}")

    def __repr__(self) -> str:  # keep key material out of logs
        return "SecretKey(<32 bytes>)"


def load_key(path: str | Path) -> SecretKey:
    """Read a key file: either 32 raw bytes or 64 hex characters."""
    raw = Path(path).read_bytes()
    if len(raw) == KEY_BYTES:
        return SecretKey(raw)
    text = raw.decode("ascii", errors="replace").strip()
    if len(text) == 2 * KEY_BYTES:
        try:
            return SecretKey(bytes.fromhex(text))
        except ValueError:
            pass
    raise CryptoError(f"key file {path} must hold 32 raw bytes or 64 hex characters")


def normalize_term(word: str) -> str:
    return word.strip().lower()


class TokenCodec:
    """Deterministic word -> CipherToken mapping; subclasses plug in schemes."""

    name: str = "abstract"

    def encrypt_token(self, plaintext: str) -> CipherToken:
        raise NotImplementedError


class KeyedTokenCodec(TokenCodec):
    """Keyed PRF over the normalized plaintext, truncated to a fixed-width tag.

    Output length never depends on input length, so token sizes leak nothing
    about the underlying words.
    """

    name = "keyed"

    def __init__(self, key: SecretKey) -> None:
        self._key = key

    def encrypt_token(self, plaintext: str) -> CipherToken:
        if not plaintext:
            raise CryptoError("cannot encrypt an empty token")
        mac = hmac.new(self._key.data, plaintext.encode("utf-8"), hashlib.sha256)
        return mac.digest()[:TAG_BYTES]


class IdentityTokenCodec(TokenCodec):
    """Pass-through codec for evaluation mode: tokens stay readable."""

    name = "identity"

    def encrypt_token(self, plaintext: str) -> CipherToken:
        if not plaintext:
            raise CryptoError("cannot encrypt an empty token")
        return plaintext.encode("utf-8")

    @staticmethod
    def decode(token: CipherToken) -> str:
        return token.decode("utf-8")


def encrypt_query(codec: TokenCodec, query: str) -> list[CipherToken]:
    """Split a query on whitespace, normalize, encrypt; order kept, dupes dropped."""
    out: list[CipherToken] = []
    seen: set[CipherToken] = set()
    for term in query.split():
        term = normalize_term(term)
        if not term:
            continue
        token = codec.encrypt_token(term)
        if token not in seen:
            seen.add(token)
            out.append(token)
    return out


def token_to_b64(token: CipherToken) -> str:
    return base64.b64encode(token).decode("ascii")


def token_from_b64(text: str) -> CipherToken:
    return base64.b64decode(text.encode("ascii"), validate=True)
