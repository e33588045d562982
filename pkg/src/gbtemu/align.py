"""Receiver frame synchronization by header pattern search.

The aligner looks at one 120-bit window per frame period.  While
searching, a window without a valid header costs a one-bit slip.  The
first valid header starts confirmation; 32 further consecutive valid
headers at the same offset give lock.  In lock, ``unlock_after``
consecutive bad headers drop back to searching.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .frame import FRAME_BITS, HEADER_BITS, mode_for_header

CONFIRM_HEADERS = 32
UNLOCK_AFTER = 4


class Phase(Enum):
    SEARCHING = "Searching"
    CONFIRMING = "Confirming"
    LOCKED = "Locked"


class Event(Enum):
    SLIPPED = "Slipped"
    HEADER_SEEN = "HeaderSeen"
    LOCK_ACQUIRED = "LockAcquired"
    HEADER_MISS = "HeaderMiss"
    LOCK_LOST = "LockLost"
    IN_LOCK = "InLock"


@dataclass(frozen=True)
class AlignerState:
    phase: Phase = Phase.SEARCHING
    bit_offset: int = 0
    good_count: int = 0  # valid headers seen after the first one
    bad_count: int = 0
    frames_consumed: int = 0
    confirm_headers: int = CONFIRM_HEADERS
    unlock_after: int = UNLOCK_AFTER


def right_shift(stream, offset: int) -> np.ndarray:
    if not 0 <= offset < FRAME_BITS:
        raise ValueError(f"offset must be in [0, {FRAME_BITS}), got {offset}")
    return np.asarray(stream, dtype=np.uint8)[offset:]


def header_ok(window) -> bool:
    return mode_for_header(window[:HEADER_BITS]) is not None


def aligner_step(state: AlignerState, window) -> tuple[AlignerState, Event]:
    ok = header_ok(window)
    new = dataclasses.replace
    s = new(state, frames_consumed=state.frames_consumed + 1)
    slip = (s.bit_offset + 1) % FRAME_BITS

    if s.phase is Phase.SEARCHING:
        if ok:
            return new(s, phase=Phase.CONFIRMING, good_count=0, bad_count=0), Event.HEADER_SEEN
        return new(s, bit_offset=slip), Event.SLIPPED

    if s.phase is Phase.CONFIRMING:
        if not ok:
            return new(s, phase=Phase.SEARCHING, good_count=0, bit_offset=slip), Event.SLIPPED
        good = s.good_count + 1
        if good >= s.confirm_headers:
            return new(s, phase=Phase.LOCKED, good_count=good, bad_count=0), Event.LOCK_ACQUIRED
        return new(s, good_count=good), Event.HEADER_SEEN

    if ok:
        return new(s, bad_count=0), Event.IN_LOCK
    bad = s.bad_count + 1
    if bad >= s.unlock_after:
        return new(s, phase=Phase.SEARCHING, good_count=0, bad_count=0), Event.LOCK_LOST
    return new(s, bad_count=bad), Event.HEADER_MISS


@dataclass(frozen=True)
class AlignedWindow:
    frame_idx: int
    start: int  # absolute bit position of the window in the stream
    event: Event
    state: AlignerState  # state after the step
    bits: np.ndarray

    def log_line(self) -> str:
        s = self.state
        return f"{self.frame_idx} {self.event.value} {s.bit_offset} {s.good_count} {s.bad_count}"


class FrameAligner:
    """Incremental aligner over a bitstream delivered in arbitrary chunks."""

    def __init__(self, state: AlignerState | None = None):
        self.state = state or AlignerState()
        self._buf = np.zeros(0, dtype=np.uint8)
        self._base = 0  # absolute stream position of _buf[0]
        self.frame_idx = 0

    def feed(self, bits) -> list[AlignedWindow]:
        out = []
        self._buf = np.concatenate([self._buf, np.asarray(bits, dtype=np.uint8)])
        while True:
            start = FRAME_BITS * self.frame_idx + self.state.bit_offset
            lo = start - self._base
            if lo + FRAME_BITS > self._buf.size:
                break
            window = self._buf[lo:lo + FRAME_BITS]
            self.state, event = aligner_step(self.state, window)
            out.append(AlignedWindow(self.frame_idx, start, event, self.state, window))
            self.frame_idx += 1
        # the next window never starts before frame_idx * 120
        drop = min(FRAME_BITS * self.frame_idx - self._base, self._buf.size)
        if drop > 0:
            self._buf = self._buf[drop:]
            self._base += drop
        return out
