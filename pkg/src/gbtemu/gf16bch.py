"""GF(2^4) arithmetic and the double-error-correcting (15, 7) BCH code.

Field elements are plain ints in [0, 16), polynomial basis modulo
x^4 + x + 1, with alpha = x = 2 as the primitive element.

Codewords are length-15 bit arrays.  Bit ``i`` holds the coefficient of
``x**(14 - i)``: bits 0..6 are the systematic message and bits 7..14 the
parity, so the message goes out on the wire first.  Decoding uses the
closed-form Peterson solution for two errors followed by a Chien search
over the 15 bit positions.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

FIELD_POLY = 0b10011  # x^4 + x + 1
ALPHA = 2
N = 15
K = 7
T = 2
# lcm(minpoly(alpha), minpoly(alpha^3)) = (x^4+x+1)(x^4+x^3+x^2+x+1)
GENERATOR = 0b111010001  # x^8 + x^7 + x^6 + x^4 + 1
PARITY_BITS = N - K


def _build_tables():
    exp = [0] * 30
    log = [0] * 16
    v = 1
    for i in range(15):
        exp[i] = exp[i + 15] = v
        log[v] = i
        v <<= 1
        if v & 0x10:
            v ^= FIELD_POLY
    return exp, log


EXP, LOG = _build_tables()


def gf16_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return EXP[LOG[a] + LOG[b]]


def gf16_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("0 has no inverse in GF(16)")
    return EXP[(15 - LOG[a]) % 15]


def gf16_pow(a: int, n: int) -> int:
    if a == 0:
        return 1 if n == 0 else 0
    return EXP[(LOG[a] * n) % 15]


def gf16_div(a: int, b: int) -> int:
    return gf16_mul(a, gf16_inv(b))


class DecodeStatus(Enum):
    CLEAN = "clean"
    CORRECTED = "corrected"
    UNCORRECTABLE = "uncorrectable"


@dataclass(frozen=True)
class DecodeOutcome:
    message: np.ndarray
    errors_corrected: int
    status: DecodeStatus


def _poly_mod(value: int, divisor: int) -> int:
    dlen = divisor.bit_length()
    while value.bit_length() >= dlen:
        value ^= divisor << (value.bit_length() - dlen)
    return value


def _bits_to_int(bits) -> int:
    v = 0
    for b in bits:
        v = (v << 1) | int(b)
    return v


def _int_to_bits(v: int, width: int) -> np.ndarray:
    return np.array([(v >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def bch_encode(msg) -> np.ndarray:
    """Systematic encode: c(x) = m(x) x^8 + (m(x) x^8 mod g(x))."""
    msg = np.asarray(msg, dtype=np.uint8)
    if msg.shape != (K,):
        raise ValueError(f"message must have {K} bits, got shape {msg.shape}")
    shifted = _bits_to_int(msg) << PARITY_BITS
    return _int_to_bits(shifted | _poly_mod(shifted, GENERATOR), N)


def bch_syndromes(cw) -> tuple[int, int]:
    """Return (S1, S3) = (r(alpha), r(alpha^3)) for the received word."""
    s1 = s3 = 0
    for i, bit in enumerate(cw):
        if bit:
            e = N - 1 - i
            s1 ^= EXP[e % 15]
            s3 ^= EXP[(3 * e) % 15]
    return s1, s3


def chien_search(sigma1: int, sigma2: int) -> list[int]:
    """Exponents e with sigma(alpha^-e) = 0 for sigma(x) = 1 + s1 x + s2 x^2."""
    roots = []
    for e in range(15):
        x = EXP[(15 - e) % 15]
        if 1 ^ gf16_mul(sigma1, x) ^ gf16_mul(sigma2, gf16_mul(x, x)) == 0:
            roots.append(e)
    return roots


def locate_errors(s1: int, s3: int) -> list[int] | None:
    """Peterson t=2 locator + Chien search.

    Returns the bit indices to flip ([] for a clean word), or None when the
    syndromes are not consistent with at most two errors.
    """
    if s1 == 0 and s3 == 0:
        return []
    if s1 == 0:
        return None
    s1_cubed = gf16_pow(s1, 3)
    if s3 == s1_cubed:
        return [N - 1 - LOG[s1]]
    sigma2 = gf16_div(s3 ^ s1_cubed, s1)
    roots = chien_search(s1, sigma2)
    if len(roots) != 2:
        return None
    return sorted(N - 1 - e for e in roots)


def bch_decode(cw) -> DecodeOutcome:
    cw = np.asarray(cw, dtype=np.uint8)
    if cw.shape != (N,):
        raise ValueError(f"codeword must have {N} bits, got shape {cw.shape}")
    positions = locate_errors(*bch_syndromes(cw))
    if positions is None:
        return DecodeOutcome(cw[:K].copy(), 0, DecodeStatus.UNCORRECTABLE)
    if not positions:
        return DecodeOutcome(cw[:K].copy(), 0, DecodeStatus.CLEAN)
    fixed = cw.copy()
    fixed[positions] ^= 1
    if bch_syndromes(fixed) != (0, 0):
        return DecodeOutcome(cw[:K].copy(), 0, DecodeStatus.UNCORRECTABLE)
    return DecodeOutcome(fixed[:K], len(positions), DecodeStatus.CORRECTED)


# Batched paths used by the link pipeline.  The correction table is filled
# by running the scalar Peterson/Chien decoder on every syndrome pair, so
# both paths make identical decisions.

_POS_S1 = np.array([EXP[(N - 1 - i) % 15] for i in range(N)], dtype=np.uint8)
_POS_S3 = np.array([EXP[(3 * (N - 1 - i)) % 15] for i in range(N)], dtype=np.uint8)
_CODEBOOK = np.array([bch_encode(_int_to_bits(m, K)) for m in range(1 << K)], dtype=np.uint8)
_WEIGHTS = 1 << np.arange(K - 1, -1, -1)


def _build_correction_table():
    masks = np.zeros((256, N), dtype=np.uint8)
    counts = np.zeros(256, dtype=np.int64)
    ok = np.zeros(256, dtype=bool)
    for s1 in range(16):
        for s3 in range(16):
            idx = (s1 << 4) | s3
            positions = locate_errors(s1, s3)
            if positions is None:
                continue
            masks[idx, positions] = 1
            if bch_syndromes(masks[idx]) != (s1, s3):
                masks[idx] = 0
                continue
            counts[idx] = len(positions)
            ok[idx] = True
    return masks, counts, ok


_CORR_MASK, _CORR_COUNT, _CORR_OK = _build_correction_table()


def encode_many(messages: np.ndarray) -> np.ndarray:
    """Encode an (..., 7) bit array into (..., 15) codewords."""
    messages = np.asarray(messages, dtype=np.uint8)
    return _CODEBOOK[(messages.astype(np.int64) * _WEIGHTS).sum(axis=-1)]


def syndromes_many(words: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    words = np.asarray(words, dtype=np.uint8)
    s1 = np.bitwise_xor.reduce(words * _POS_S1, axis=-1)
    s3 = np.bitwise_xor.reduce(words * _POS_S3, axis=-1)
    return s1, s3


def decode_many(words: np.ndarray):
    """Decode an (..., 15) array of received words.

    Returns ``(messages, errors_corrected, uncorrectable)``.  Uncorrectable
    words pass their raw systematic bits through.
    """
    words = np.asarray(words, dtype=np.uint8)
    s1, s3 = syndromes_many(words)
    idx = (s1.astype(np.int64) << 4) | s3
    fixed = words ^ _CORR_MASK[idx]
    return fixed[..., :K], _CORR_COUNT[idx], ~_CORR_OK[idx]
