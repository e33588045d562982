"""Self-synchronizing multiplicative scrambler, four 13-bit lanes.

Scrambler:    y[n] = x[n] ^ y[n-1] ^ y[n-3] ^ y[n-4] ^ y[n-13]
Descrambler:  x[n] = y[n] ^ y[n-1] ^ y[n-3] ^ y[n-4] ^ y[n-13]

i.e. division / multiplication by 1 + D + D^3 + D^4 + D^13, which is the
reciprocal of the primitive polynomial x^13 + x^4 + x^3 + x + 1.  With a
zero input the scrambler free-runs through the 8191-bit m-sequence.

Lane history is an int whose bit k holds y[n-1-k].
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LANE_BITS = 13
N_LANES = 4
TAPS = (1, 3, 4, 13)
DEFAULT_SEED = 0x1555
_MASK = (1 << LANE_BITS) - 1
_TAP_MASK = sum(1 << (d - 1) for d in TAPS)


@dataclass
class ScramblerLane:
    seed: int = DEFAULT_SEED
    history: int = field(init=False)

    def __post_init__(self):
        if not 0 < self.seed <= _MASK:
            raise ValueError(f"lane seed must be a nonzero 13-bit value, got {self.seed:#x}")
        self.history = self.seed

    def reset(self):
        self.history = self.seed


@dataclass
class LaneBank:
    seeds: tuple[int, ...] = (DEFAULT_SEED,) * N_LANES
    lanes: list[ScramblerLane] = field(init=False)

    def __post_init__(self):
        if len(self.seeds) != N_LANES:
            raise ValueError(f"need {N_LANES} lane seeds, got {len(self.seeds)}")
        self.seeds = tuple(int(s) for s in self.seeds)
        self.lanes = [ScramblerLane(s) for s in self.seeds]

    def reset(self):
        for lane in self.lanes:
            lane.reset()


def scramble_lane(lane: ScramblerLane, bits) -> np.ndarray:
    h = lane.history
    out = []
    append = out.append
    for x in np.asarray(bits, dtype=np.uint8).tolist():
        y = x ^ ((h & _TAP_MASK).bit_count() & 1)
        append(y)
        h = ((h << 1) | y) & _MASK
    lane.history = h
    return np.array(out, dtype=np.uint8)


def _history_bits(h: int) -> np.ndarray:
    # oldest first: y[n-13] .. y[n-1]
    return np.array([(h >> k) & 1 for k in range(LANE_BITS - 1, -1, -1)], dtype=np.uint8)


def _history_int(bits: np.ndarray) -> int:
    h = 0
    for b in bits[-LANE_BITS:].tolist():
        h = ((h << 1) | b) & _MASK
    return h


def descramble_lane(lane: ScramblerLane, bits) -> np.ndarray:
    y = np.asarray(bits, dtype=np.uint8)
    if y.size == 0:
        return y.copy()
    ext = np.concatenate([_history_bits(lane.history), y])
    n = y.size
    out = y.copy()
    for d in TAPS:
        out ^= ext[LANE_BITS - d:LANE_BITS - d + n]
    lane.history = _history_int(ext)
    return out


def _check_payload(payload) -> np.ndarray:
    payload = np.asarray(payload, dtype=np.uint8)
    if payload.shape[-1] % N_LANES:
        raise ValueError(f"payload length {payload.shape[-1]} is not divisible by {N_LANES}")
    return payload


def _run_lanes(bank: LaneBank, payloads: np.ndarray, fn) -> np.ndarray:
    payloads = _check_payload(payloads)
    frames = payloads.reshape(-1, payloads.shape[-1])
    width = frames.shape[1] // N_LANES
    out = np.empty_like(frames)
    for k, lane in enumerate(bank.lanes):
        cols = slice(k * width, (k + 1) * width)
        # lane k sees its block of every frame back to back
        out[:, cols] = fn(lane, frames[:, cols].reshape(-1)).reshape(-1, width)
    return out.reshape(payloads.shape)


def scramble_payload(bank: LaneBank, payload) -> np.ndarray:
    """Scramble one payload (or an (n_frames, L) batch, frames in order)."""
    return _run_lanes(bank, payload, scramble_lane)


def descramble_payload(bank: LaneBank, payload) -> np.ndarray:
    return _run_lanes(bank, payload, descramble_lane)
