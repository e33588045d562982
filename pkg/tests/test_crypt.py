import os

import numpy as np
import pytest
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from hypothesis import given, settings, strategies as st
from sympy import isprime

from gbtemu.crypt import (
    DEMO_RSA,
    AesKey,
    CounterExhausted,
    FrameCipherState,
    aes_decrypt_block,
    aes_encrypt_block,
    keystream_bits,
    mask_frame,
    rsa_decrypt,
    rsa_encrypt,
    rsa_keygen,
    unwrap_session_key,
    wrap_session_key,
)

KAT_KEY = bytes.fromhex("000102030405060708090a0b0c0d0e0f")
KAT_PT = bytes.fromhex("00112233445566778899aabbccddeeff")


def oracle_encrypt(key: bytes, block: bytes) -> bytes:
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    return enc.update(block) + enc.finalize()


def modpow(b, e, m):
    # square-and-multiply, independent of the builtin three-arg pow
    r = 1
    b %= m
    while e:
        if e & 1:
            r = r * b % m
        b = b * b % m
        e >>= 1
    return r


@pytest.mark.parametrize("key_hex, ct_hex", [
    ("000102030405060708090a0b0c0d0e0f", "69c4e0d86a7b0430d8cdb78070b4c55a"),
    ("000102030405060708090a0b0c0d0e0f1011121314151617", "dda97ca4864cdfe06eaf70a0ec0d7191"),
    ("000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f",
     "8ea2b7ca516745bfeafc49904b496089"),
])
def test_fips197_appendix_c(key_hex, ct_hex):
    key = AesKey(bytes.fromhex(key_hex))
    ct = aes_encrypt_block(key, KAT_PT)
    assert ct.hex() == ct_hex
    assert aes_decrypt_block(key, ct) == KAT_PT


def test_rounds_follow_key_size():
    assert [AesKey(bytes(n)).rounds for n in (16, 24, 32)] == [10, 12, 14]
    with pytest.raises(ValueError):
        AesKey(bytes(15))


@settings(max_examples=60)
@given(st.sampled_from([16, 24, 32]), st.binary(min_size=32, max_size=32), st.binary(min_size=16, max_size=16))
def test_matches_reference_library(klen, keymat, block):
    key = AesKey(keymat[:klen])
    ct = aes_encrypt_block(key, block)
    assert ct == oracle_encrypt(keymat[:klen], block)
    assert aes_decrypt_block(key, ct) == block


def test_distinct_keys_distinct_ciphertexts():
    other = AesKey(bytes.fromhex("0f0e0d0c0b0a09080706050403020100"))
    assert aes_encrypt_block(AesKey(KAT_KEY), KAT_PT) != aes_encrypt_block(other, KAT_PT)


def test_keystream_is_cipher_of_zero_block():
    ks = keystream_bits(AesKey(KAT_KEY), 0, 0)
    ref = np.unpackbits(np.frombuffer(oracle_encrypt(KAT_KEY, bytes(16)), dtype=np.uint8))[:116]
    assert np.array_equal(ks, ref)


def test_mask_keeps_header_and_is_involution():
    rng = np.random.default_rng(5)
    tx = FrameCipherState(AesKey(KAT_KEY), nonce=7)
    rx = FrameCipherState(AesKey(KAT_KEY), nonce=7)
    for _ in range(20):
        f = rng.integers(0, 2, 120, dtype=np.uint8)
        c = mask_frame(tx, f)
        assert np.array_equal(c[:4], f[:4])
        assert np.array_equal(mask_frame(rx, c), f)
    assert tx.frame_counter == rx.frame_counter == 20


def test_counter_exhaustion():
    st_ = FrameCipherState(AesKey(KAT_KEY), frame_counter=2**64)
    with pytest.raises(CounterExhausted):
        mask_frame(st_, np.zeros(120, dtype=np.uint8))


def test_rsa_textbook_instance():
    kp = rsa_keygen(61, 53, 17)
    assert kp.n == 3233 and kp.d == 2753
    assert (kp.e * kp.d) % 780 == 1
    assert rsa_encrypt(kp.public, 65) == modpow(65, 17, 3233) == 2790
    assert rsa_decrypt(kp, 2790) == 65
    assert rsa_encrypt(kp.public, 0) == 0 and rsa_encrypt(kp.public, 1) == 1


def test_rsa_exhaustive_small_modulus():
    kp = rsa_keygen(61, 53, 17)
    for m in range(kp.n):
        c = rsa_encrypt(kp.public, m)
        assert c == modpow(m, 17, 3233)
        assert rsa_decrypt(kp, c) == m


def test_rsa_errors():
    with pytest.raises(ValueError):
        rsa_keygen(61, 53, 3)  # gcd(3, 780) = 3
    with pytest.raises(ValueError):
        rsa_keygen(61, 61, 17)
    kp = rsa_keygen(61, 53, 17)
    with pytest.raises(ValueError):
        rsa_encrypt(kp.public, 3233)


def test_demo_key_primes():
    assert isprime(DEMO_RSA.p) and isprime(DEMO_RSA.q)
    assert DEMO_RSA.n > 2**128


BIG = rsa_keygen(2**127 - 1, 2**128 - 159, 65537)


def test_big_modulus_primes():
    assert isprime(2**128 - 159)
    assert BIG.n.bit_length() == 255


@pytest.mark.parametrize("seed", range(20))
def test_wrap_roundtrip_single_chunk(seed):
    key = AesKey(np.random.default_rng(seed).bytes(16))
    w = wrap_session_key(BIG.public, key)
    assert len(w.chunks) == 1
    assert w.chunks[0] == modpow(int.from_bytes(key.key_bytes, "big"), 65537, BIG.n)
    assert unwrap_session_key(BIG, w) == key


def test_wrap_zero_key():
    key = AesKey(bytes(16))
    assert unwrap_session_key(BIG, wrap_session_key(BIG.public, key)) == key


def test_wrap_chunked_small_modulus():
    kp = rsa_keygen(61, 53, 17)  # 11-bit chunks
    key = AesKey(os.urandom(16))
    w = wrap_session_key(kp.public, key)
    assert len(w.chunks) == -(-128 // 11) == 12
    # chunk oracle: split the key integer by hand
    v = int.from_bytes(key.key_bytes, "big")
    plain = [rsa_decrypt(kp, c) for c in w.chunks]
    rebuilt = 0
    for p in plain[:-1]:
        rebuilt = (rebuilt << 11) | p
    rebuilt = (rebuilt << (128 - 11 * 11)) | plain[-1]
    assert rebuilt == v
    assert unwrap_session_key(kp, w) == key
