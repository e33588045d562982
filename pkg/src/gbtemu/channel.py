"""Bit-error channel models and the Eb/N0 mapping.

All randomness comes from ``numpy.random.Generator(PCG64(seed))``
(``np.random.default_rng(seed)``), so a (model, seed) pair gives the same
error trace on every machine with the same numpy stream version.  The
streaming :class:`Channel` draws exactly the same numbers whether a stream
is processed in one call or in chunks, which keeps the network path and
the in-process path bit-identical.

Draw order per model:

* ``bsc``/``awgn``: one ``random()`` double per bit, flip when < p.
* ``burst``: one ``random()`` double per bit, a burst starts when
  < event_rate; a burst covers ``burst_len`` bits from its start
  (overlapping bursts flip a bit once).
* ``poisson``: per block of ``block_bits`` bits, one ``poisson(lam *
  block_bits)`` draw, then ``choice(block_bits, k, replace=False)`` for
  the positions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


class Kind(Enum):
    BSC = "bsc"
    BURST = "burst"
    POISSON = "poisson"
    AWGN = "awgn"


def ebn0_to_p(ebn0_db: float) -> float:
    """Hard-decision BPSK crossover probability Q(sqrt(2 Eb/N0))."""
    ebn0 = 10.0 ** (ebn0_db / 10.0)
    return 0.5 * math.erfc(math.sqrt(ebn0))


@dataclass(frozen=True)
class ChannelModel:
    kind: Kind = Kind.BSC
    p: float = 0.0
    event_rate: float = 0.0
    burst_len: int = 1
    lam: float = 0.0
    block_bits: int = 120
    ebn0_db: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must be in [0, 1], got {self.p}")
        if not 0.0 <= self.event_rate <= 1.0:
            raise ValueError(f"event_rate must be in [0, 1], got {self.event_rate}")
        if self.burst_len < 1:
            raise ValueError("burst_len must be >= 1")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.block_bits < 1:
            raise ValueError("block_bits must be >= 1")

    @classmethod
    def bsc(cls, p: float, seed: int = 0) -> "ChannelModel":
        return cls(Kind.BSC, p=p, seed=seed)

    @classmethod
    def burst(cls, event_rate: float, burst_len: int, seed: int = 0) -> "ChannelModel":
        return cls(Kind.BURST, event_rate=event_rate, burst_len=burst_len, seed=seed)

    @classmethod
    def poisson(cls, lam: float, block_bits: int = 120, seed: int = 0) -> "ChannelModel":
        return cls(Kind.POISSON, lam=lam, block_bits=block_bits, seed=seed)

    @classmethod
    def awgn(cls, ebn0_db: float, seed: int = 0) -> "ChannelModel":
        return cls(Kind.AWGN, ebn0_db=ebn0_db, seed=seed)

    @property
    def crossover(self) -> float:
        """Mean per-bit flip rate (exact for BSC/AWGN; overlapping bursts make Burst slightly lower)."""
        if self.kind is Kind.AWGN:
            return ebn0_to_p(self.ebn0_db)
        if self.kind is Kind.BURST:
            return self.event_rate * self.burst_len
        if self.kind is Kind.POISSON:
            return self.lam
        return self.p

    def describe(self) -> str:
        if self.kind is Kind.BURST:
            return f"burst(rate={self.event_rate:g}, len={self.burst_len})"
        if self.kind is Kind.POISSON:
            return f"poisson(lam={self.lam:g}, block={self.block_bits})"
        if self.kind is Kind.AWGN:
            return f"awgn({self.ebn0_db:g} dB, p={self.crossover:.3e})"
        return f"bsc(p={self.p:g})"


@dataclass(frozen=True)
class ErrorTrace:
    flipped_positions: np.ndarray
    total_bits: int

    def __len__(self):
        return int(self.flipped_positions.size)

    def dump(self) -> str:
        return "".join(f"{int(i)}\n" for i in self.flipped_positions)

    @classmethod
    def load(cls, text: str, total_bits: int) -> "ErrorTrace":
        pos = np.array([int(line) for line in text.split()], dtype=np.int64)
        return cls(pos, total_bits)

    def replay(self, bits) -> np.ndarray:
        out = np.array(bits, dtype=np.uint8)
        out[self.flipped_positions] ^= 1
        return out


class Channel:
    """Stateful error injector; chunking the input does not change the result."""

    def __init__(self, model: ChannelModel):
        self.model = model
        self.rng = np.random.default_rng(model.seed)
        self.position = 0
        self._burst_tail = np.zeros(model.burst_len - 1, dtype=bool)
        self._block_flips = np.zeros(model.block_bits, dtype=bool)

    def error_mask(self, n: int) -> np.ndarray:
        m = self.model
        if m.kind in (Kind.BSC, Kind.AWGN):
            mask = self.rng.random(n) < m.crossover
        elif m.kind is Kind.BURST:
            mask = self._burst_mask(n)
        else:
            mask = self._poisson_mask(n)
        self.position += n
        return mask

    def _burst_mask(self, n: int) -> np.ndarray:
        starts = self.rng.random(n) < self.model.event_rate
        L = self.model.burst_len
        ext = np.concatenate([self._burst_tail, starts])
        cs = np.concatenate([[0], np.cumsum(ext)])
        # bit i is covered if a burst started within the previous L bits
        hi = cs[L:L + n]
        lo = cs[:n]
        self._burst_tail = ext[ext.size - (L - 1):] if L > 1 else self._burst_tail
        return (hi - lo) > 0

    def _poisson_mask(self, n: int) -> np.ndarray:
        B = self.model.block_bits
        mask = np.zeros(n, dtype=bool)
        pos = self.position
        end = pos + n
        while pos < end:
            offset = pos % B
            if offset == 0:
                self._block_flips[:] = False
                k = min(int(self.rng.poisson(self.model.lam * B)), B)
                if k:
                    self._block_flips[self.rng.choice(B, k, replace=False)] = True
            take = min(B - offset, end - pos)
            mask[pos - self.position:pos - self.position + take] = self._block_flips[offset:offset + take]
            pos += take
        return mask

    def apply(self, bits) -> tuple[np.ndarray, np.ndarray]:
        """Return (noisy bits, absolute positions flipped in this chunk)."""
        bits = np.asarray(bits, dtype=np.uint8)
        start = self.position
        mask = self.error_mask(bits.size)
        return bits ^ mask.astype(np.uint8), np.flatnonzero(mask) + start


def apply_channel(model: ChannelModel, bits) -> tuple[np.ndarray, ErrorTrace]:
    out, flipped = Channel(model).apply(bits)
    return out, ErrorTrace(flipped, out.size)
