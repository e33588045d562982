"""Header-preserving block interleaver over two 60-bit halves.

Each half holds four codewords.  The half is written row-wise into a 4x15
matrix (row r = codeword) and read out column-wise, so adjacent channel
bits land in different codewords.  In half 0 the transpose would move the
header bits (codeword 0, bits 0..3) to positions 0, 4, 8, 12; three swaps
put them back at 0..3.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

FRAME_BITS = 120
HALF_BITS = 60
ROWS = 4
COLS = 15
HEADER_SWAPS = ((1, 4), (2, 8), (3, 12))


@dataclass(frozen=True)
class InterleaverMap:
    perm: np.ndarray  # perm[i] = output position of input bit i
    inv_perm: np.ndarray

    def dump(self) -> str:
        return "".join(f"{i} {int(o)}\n" for i, o in enumerate(self.perm))


@lru_cache(maxsize=None)
def build_map() -> InterleaverMap:
    perm = np.empty(FRAME_BITS, dtype=np.int64)
    for h in range(2):
        local = np.empty(HALF_BITS, dtype=np.int64)
        for r in range(ROWS):
            for c in range(COLS):
                local[COLS * r + c] = ROWS * c + r
        if h == 0:
            where = {int(o): i for i, o in enumerate(local)}
            for a, b in HEADER_SWAPS:
                ia, ib = where[a], where[b]
                local[ia], local[ib] = b, a
                where[a], where[b] = ib, ia
        perm[HALF_BITS * h:HALF_BITS * (h + 1)] = local + HALF_BITS * h
    inv = np.empty_like(perm)
    inv[perm] = np.arange(FRAME_BITS)
    perm.flags.writeable = False
    inv.flags.writeable = False
    return InterleaverMap(perm, inv)


def interleave(bits, imap: InterleaverMap | None = None) -> np.ndarray:
    """output[perm[i]] = input[i]; works on (..., 120) batches."""
    imap = imap or build_map()
    bits = np.asarray(bits, dtype=np.uint8)
    return bits[..., imap.inv_perm]


def deinterleave(bits, imap: InterleaverMap | None = None) -> np.ndarray:
    imap = imap or build_map()
    bits = np.asarray(bits, dtype=np.uint8)
    return bits[..., imap.perm]
