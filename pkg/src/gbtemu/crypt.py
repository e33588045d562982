"""Link encryption: AES block cipher, per-frame keystream masking, textbook RSA.

The frame mask encrypts ``nonce || frame_counter`` with AES and XORs the
first 116 keystream bits into frame bits 4..119.  The header stays in the
clear for the aligner, the frame keeps its size, and a channel bit error
stays a single bit error after decryption, so FEC still works underneath.

RSA is textbook (no padding).  It only wraps the AES session key.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np

BLOCK_BYTES = 16
ROUNDS = {16: 10, 24: 12, 32: 14}


def _xtime(a: int) -> int:
    a <<= 1
    return (a ^ 0x11B) if a & 0x100 else a


def _gmul(a: int, b: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        a = _xtime(a)
        b >>= 1
    return r


def _build_sbox():
    inv = [0] * 256
    for a in range(1, 256):
        for b in range(1, 256):
            if _gmul(a, b) == 1:
                inv[a] = b
                break
    sbox = []
    for a in range(256):
        x = inv[a]
        s = x
        for k in range(1, 5):
            s ^= ((x << k) | (x >> (8 - k))) & 0xFF
        sbox.append(s ^ 0x63)
    inv_sbox = [0] * 256
    for i, s in enumerate(sbox):
        inv_sbox[s] = i
    return sbox, inv_sbox


SBOX, INV_SBOX = _build_sbox()
_MUL = {k: [_gmul(a, k) for a in range(256)] for k in (2, 3, 9, 11, 13, 14)}
# state byte i sits at row i % 4, column i // 4
_SHIFT = [(i + 4 * (i % 4)) % 16 for i in range(16)]
_INV_SHIFT = [0] * 16
for _i, _s in enumerate(_SHIFT):
    _INV_SHIFT[_s] = _i


@dataclass(frozen=True)
class AesKey:
    key_bytes: bytes

    def __post_init__(self):
        if len(self.key_bytes) not in ROUNDS:
            raise ValueError(f"AES key must be 16, 24 or 32 bytes, got {len(self.key_bytes)}")

    @property
    def rounds(self) -> int:
        return ROUNDS[len(self.key_bytes)]

    @property
    def round_keys(self) -> list[list[int]]:
        try:
            return self._round_keys
        except AttributeError:
            rk = _expand_key(self.key_bytes)
            object.__setattr__(self, "_round_keys", rk)
            return rk


def _expand_key(key: bytes) -> list[list[int]]:
    nk = len(key) // 4
    nr = ROUNDS[len(key)]
    words = [list(key[4 * i:4 * i + 4]) for i in range(nk)]
    rcon = 1
    for i in range(nk, 4 * (nr + 1)):
        t = list(words[i - 1])
        if i % nk == 0:
            t = t[1:] + t[:1]
            t = [SBOX[b] for b in t]
            t[0] ^= rcon
            rcon = _xtime(rcon)
        elif nk > 6 and i % nk == 4:
            t = [SBOX[b] for b in t]
        words.append([a ^ b for a, b in zip(words[i - nk], t)])
    return [sum(words[4 * r:4 * r + 4], []) for r in range(nr + 1)]


def _mix(s, m0, m1, m2, m3):
    out = [0] * 16
    for c in range(0, 16, 4):
        a0, a1, a2, a3 = s[c:c + 4]
        out[c] = m0[a0] ^ m1[a1] ^ m2[a2] ^ m3[a3]
        out[c + 1] = m3[a0] ^ m0[a1] ^ m1[a2] ^ m2[a3]
        out[c + 2] = m2[a0] ^ m3[a1] ^ m0[a2] ^ m1[a3]
        out[c + 3] = m1[a0] ^ m2[a1] ^ m3[a2] ^ m0[a3]
    return out


_ID = list(range(256))


def aes_encrypt_block(key: AesKey, block: bytes) -> bytes:
    if len(block) != BLOCK_BYTES:
        raise ValueError("AES block must be 16 bytes")
    rk = key.round_keys
    s = [b ^ k for b, k in zip(block, rk[0])]
    for r in range(1, key.rounds + 1):
        s = [SBOX[s[_SHIFT[i]]] for i in range(16)]
        if r != key.rounds:
            s = _mix(s, _MUL[2], _MUL[3], _ID, _ID)
        s = [b ^ k for b, k in zip(s, rk[r])]
    return bytes(s)


def aes_decrypt_block(key: AesKey, block: bytes) -> bytes:
    if len(block) != BLOCK_BYTES:
        raise ValueError("AES block must be 16 bytes")
    rk = key.round_keys
    s = [b ^ k for b, k in zip(block, rk[key.rounds])]
    for r in range(key.rounds - 1, -1, -1):
        s = [INV_SBOX[s[_INV_SHIFT[i]]] for i in range(16)]
        s = [b ^ k for b, k in zip(s, rk[r])]
        if r:
            s = _mix(s, _MUL[14], _MUL[11], _MUL[13], _MUL[9])
    return bytes(s)


# -- frame masking -----------------------------------------------------------

MASK_BITS = 116
COUNTER_LIMIT = 1 << 64


class CounterExhausted(RuntimeError):
    """The 64-bit frame counter ran out; the session must be re-keyed."""


def keystream_bits(key: AesKey, nonce: int, counter: int) -> np.ndarray:
    if not 0 <= counter < COUNTER_LIMIT:
        raise CounterExhausted(f"frame counter {counter} outside the 64-bit range")
    block = nonce.to_bytes(8, "big") + counter.to_bytes(8, "big")
    ks = np.unpackbits(np.frombuffer(aes_encrypt_block(key, block), dtype=np.uint8))
    return ks[:MASK_BITS]


@dataclass
class FrameCipherState:
    session_key: AesKey
    nonce: int = 0
    frame_counter: int = 0

    def __post_init__(self):
        if not 0 <= self.nonce < 1 << 64:
            raise ValueError("nonce must fit in 64 bits")

    def keystream(self, counter: int) -> np.ndarray:
        return keystream_bits(self.session_key, self.nonce, counter)


def mask_frame(state: FrameCipherState, frame) -> np.ndarray:
    """XOR the keystream for the current counter into bits 4..119 and advance."""
    frame = np.array(frame, dtype=np.uint8)
    frame[4:] ^= state.keystream(state.frame_counter)
    state.frame_counter += 1
    return frame


def mask_frames(state: FrameCipherState, frames, counters) -> np.ndarray:
    """Mask a batch of frames using explicit per-frame counters."""
    frames = np.array(frames, dtype=np.uint8)
    for row, ctr in zip(frames, counters):
        row[4:] ^= state.keystream(int(ctr))
    return frames


# -- RSA -----------------------------------------------------------------------

@dataclass(frozen=True)
class RsaPublicKey:
    n: int
    e: int


@dataclass(frozen=True)
class RsaKeyPair:
    n: int
    e: int
    d: int
    p: int
    q: int

    @property
    def public(self) -> RsaPublicKey:
        return RsaPublicKey(self.n, self.e)


def _lcm(a: int, b: int) -> int:
    return a // gcd(a, b) * b


def _modinv(a: int, m: int) -> int:
    old_r, r = a, m
    old_s, s = 1, 0
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
    if old_r != 1:
        raise ValueError(f"{a} is not invertible modulo {m}")
    return old_s % m


def rsa_keygen(p: int, q: int, e: int) -> RsaKeyPair:
    """Key pair from caller-supplied primes; primality is the caller's job.

    d is the textbook inverse of e modulo phi(n) = (p-1)(q-1).  It is also an
    inverse modulo lcm(p-1, q-1), which divides phi(n).
    """
    if p == q:
        raise ValueError("p and q must be distinct")
    lam = _lcm(p - 1, q - 1)
    if gcd(e, lam) != 1:
        raise ValueError(f"e={e} is not coprime with lcm(p-1, q-1)={lam}")
    return RsaKeyPair(p * q, e, _modinv(e, (p - 1) * (q - 1)), p, q)


def rsa_encrypt(pub, m: int) -> int:
    if not 0 <= m < pub.n:
        raise ValueError("message must satisfy 0 <= m < n")
    return pow(m, pub.e, pub.n)


def rsa_decrypt(priv: RsaKeyPair, c: int) -> int:
    if not 0 <= c < priv.n:
        raise ValueError("ciphertext must satisfy 0 <= c < n")
    return pow(c, priv.d, priv.n)


@dataclass(frozen=True)
class WrappedKey:
    key_len: int
    chunks: tuple[int, ...]


def _chunk_bits(n: int) -> int:
    return n.bit_length() - 1


def wrap_session_key(pub, key: AesKey) -> WrappedKey:
    """RSA-encrypt the key, split into (bits(n) - 1)-bit chunks when it does not fit.

    Chunks are taken most significant first.
    """
    width = _chunk_bits(pub.n)
    if width < 1:
        raise ValueError("modulus too small to wrap anything")
    total = 8 * len(key.key_bytes)
    value = int.from_bytes(key.key_bytes, "big")
    count = -(-total // width)
    chunks = []
    for i in range(count):
        shift = max(total - width * (i + 1), 0)
        size = min(width, total - width * i)
        chunks.append(rsa_encrypt(pub, (value >> shift) & ((1 << size) - 1)))
    return WrappedKey(len(key.key_bytes), tuple(chunks))


def unwrap_session_key(priv: RsaKeyPair, wrapped: WrappedKey) -> AesKey:
    width = _chunk_bits(priv.n)
    total = 8 * wrapped.key_len
    value = 0
    for i, c in enumerate(wrapped.chunks):
        size = min(width, total - width * i)
        value = (value << size) | rsa_decrypt(priv, c)
    return AesKey(value.to_bytes(wrapped.key_len, "big"))


# Demo material for examples and the CLI when no key file is given.
# 2^127 - 1 and 2^89 - 1 are Mersenne primes, so n > 2^128 and a 16-byte
# key wraps in one chunk.  Never use these for anything real.
DEMO_AES_KEY = AesKey(bytes(range(16)))
DEMO_NONCE = 0x0123456789ABCDEF
DEMO_RSA = rsa_keygen(2**127 - 1, 2**89 - 1, 65537)
