import base64

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cipherclust.crypto import (
    CryptoError,
    IdentityTokenCodec,
    KeyedTokenCodec,
    SecretKey,
    encrypt_query,
    load_key,
    normalize_term,
    token_from_b64,
    token_to_b64,
)

KEY_A = SecretKey(bytes(range(32)))
KEY_B = SecretKey(bytes(range(1, 33)))

words = st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789", min_size=1, max_size=24)


class TestKeyedCodec:
    def test_deterministic(self):
        codec = KeyedTokenCodec(KEY_A)
        assert codec.encrypt_token("net") == codec.encrypt_token("net")

    def test_keyed(self):
        assert KeyedTokenCodec(KEY_A).encrypt_token("net") != KeyedTokenCodec(KEY_B).encrypt_token("net")

    def test_fixed_width(self):
        codec = KeyedTokenCodec(KEY_A)
        assert len(codec.encrypt_token("a")) == len(codec.encrypt_token("a" * 120)) == 16

    def test_empty_rejected(self):
        with pytest.raises(CryptoError):
            KeyedTokenCodec(KEY_A).encrypt_token("")

    def test_redeterminism_bulk(self):
        # 10k random words re-encrypt to byte-identical ciphertexts
        rng = np.random.default_rng(7)
        vocab = ["w%d%04d" % (rng.integers(0, 10), i) for i in range(10_000)]
        codec = KeyedTokenCodec(KEY_A)
        first = [codec.encrypt_token(w) for w in vocab]
        second = [codec.encrypt_token(w) for w in vocab]
        assert first == second

    def test_no_collisions_at_desk_scale(self):
        codec = KeyedTokenCodec(KEY_A)
        tokens = {codec.encrypt_token(f"word{i}") for i in range(100_000)}
        assert len(tokens) == 100_000


class TestIdentityCodec:
    def test_b64_decodes_to_word(self):
        token = IdentityTokenCodec().encrypt_token("net")
        assert base64.b64decode(token_to_b64(token)).decode() == "net"

    @given(word=words)
    def test_round_trip(self, word):
        codec = IdentityTokenCodec()
        assert IdentityTokenCodec.decode(codec.encrypt_token(word)) == word


class TestEncryptQuery:
    def test_normalizes_and_orders(self):
        codec = KeyedTokenCodec(KEY_A)
        assert encrypt_query(codec, "Net Traffic") == [
            codec.encrypt_token("net"),
            codec.encrypt_token("traffic"),
        ]

    def test_dedup(self):
        codec = KeyedTokenCodec(KEY_A)
        assert encrypt_query(codec, "net net") == [codec.encrypt_token("net")]

    def test_empty(self):
        assert encrypt_query(KeyedTokenCodec(KEY_A), "") == []
        assert encrypt_query(KeyedTokenCodec(KEY_A), "   ") == []


class TestKeyHandling:
    def test_key_must_be_32_bytes(self):
        with pytest.raises(CryptoError):
            SecretKey(b"short")

    def test_load_raw_and_hex(self, tmp_path):
        raw = tmp_path / "raw.key"
        raw.write_bytes(bytes(range(32)))
        assert load_key(raw).data == bytes(range(32))
        hexfile = tmp_path / "hex.key"
        hexfile.write_text(bytes(range(32)).hex() + "\n")
        assert load_key(hexfile).data == bytes(range(32))

    def test_load_rejects_garbage(self, tmp_path):
        bad = tmp_path / "bad.key"
        bad.write_bytes(b"nope")
        with pytest.raises(CryptoError):
            load_key(bad)

    def test_repr_hides_material(self):
        assert "00" not in repr(SecretKey(bytes(32)))


@given(word=st.text(min_size=0, max_size=10))
def test_normalize_term_idempotent(word):
    once = normalize_term(word)
    assert normalize_term(once) == once


@given(token=st.binary(min_size=1, max_size=40))
def test_b64_round_trip(token):
    assert token_from_b64(token_to_b64(token)) == token
