"""120-bit frame layout, word mux, byte serialization and rate arithmetic."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

FRAME_BITS = 120
FRAME_BYTES = FRAME_BITS // 8
HEADER_BITS = 4
SC_BITS = 4
BODY_BITS = FRAME_BITS - HEADER_BITS
WORD_BITS = 40
WORDS_PER_FRAME = FRAME_BITS // WORD_BITS


class Mode(Enum):
    STANDARD = "standard"
    NOFEC = "nofec"

    @property
    def header(self) -> tuple[int, ...]:
        return HEADERS[self]

    @property
    def payload_bits(self) -> int:
        """Scrambled user bits per frame: slow control plus data."""
        return 52 if self is Mode.STANDARD else 116

    @property
    def data_bits(self) -> int:
        return self.payload_bits - SC_BITS

    @property
    def fec_bits(self) -> int:
        return 64 if self is Mode.STANDARD else 0


HEADERS = {Mode.STANDARD: (1, 0, 1, 0), Mode.NOFEC: (0, 1, 0, 1)}
_BY_HEADER = {v: k for k, v in HEADERS.items()}


def mode_for_header(header) -> Mode | None:
    return _BY_HEADER.get(tuple(int(b) for b in header))


@dataclass(frozen=True)
class Frame:
    """Logical view of one frame's fields (before coding)."""

    mode: Mode
    slow_control: np.ndarray
    data: np.ndarray
    fec: np.ndarray | None = None

    def __post_init__(self):
        if len(self.slow_control) != SC_BITS:
            raise ValueError("slow control field is 4 bits")
        if len(self.data) != self.mode.data_bits:
            raise ValueError(f"{self.mode.value} data field is {self.mode.data_bits} bits")
        fec_len = 0 if self.fec is None else len(self.fec)
        if fec_len != self.mode.fec_bits:
            raise ValueError(f"{self.mode.value} FEC field is {self.mode.fec_bits} bits")

    @property
    def header(self) -> tuple[int, ...]:
        return self.mode.header

    @property
    def payload(self) -> np.ndarray:
        return np.concatenate([self.slow_control, self.data]).astype(np.uint8)


def pack_frame(header, body) -> np.ndarray:
    header = tuple(int(b) for b in header)
    if mode_for_header(header) is None:
        raise ValueError(f"unknown frame header {header}")
    body = np.asarray(body, dtype=np.uint8)
    if body.shape != (BODY_BITS,):
        raise ValueError(f"frame body must be {BODY_BITS} bits, got {body.shape}")
    return np.concatenate([np.array(header, dtype=np.uint8), body])


def unpack_frame(frame) -> tuple[tuple[int, ...], np.ndarray]:
    frame = np.asarray(frame, dtype=np.uint8)
    if frame.shape != (FRAME_BITS,):
        raise ValueError(f"frame must be {FRAME_BITS} bits, got {frame.shape}")
    return tuple(int(b) for b in frame[:HEADER_BITS]), frame[HEADER_BITS:].copy()


def mux_words(frame) -> np.ndarray:
    """Split a frame (or batch of frames) into 40-bit words, bit 0 first."""
    frame = np.asarray(frame, dtype=np.uint8)
    return frame.reshape(frame.shape[:-1] + (WORDS_PER_FRAME, WORD_BITS))


def demux_words(words) -> np.ndarray:
    words = np.asarray(words, dtype=np.uint8)
    return words.reshape(words.shape[:-2] + (FRAME_BITS,))


def frames_to_bytes(frames) -> bytes:
    """Pack frames MSB-first: frame bit 0 is the top bit of byte 0."""
    return np.packbits(np.asarray(frames, dtype=np.uint8).reshape(-1)).tobytes()


def bytes_to_frames(data: bytes) -> np.ndarray:
    if len(data) % FRAME_BYTES:
        raise ValueError(f"{len(data)} bytes is not a whole number of {FRAME_BYTES}-byte frames")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    return bits.reshape(-1, FRAME_BITS)


@dataclass(frozen=True)
class LinkTiming:
    frame_clock_hz: float = 40e6

    @property
    def serial_clock_hz(self) -> float:
        return WORDS_PER_FRAME * self.frame_clock_hz

    @property
    def line_rate_bps(self) -> float:
        return self.frame_clock_hz * FRAME_BITS


@dataclass(frozen=True)
class Throughput:
    payload_bps: float
    line_bps: float
    efficiency: float

    @property
    def efficiency_percent(self) -> float:
        return round(100 * self.efficiency, 2)


def throughput(timing: LinkTiming = LinkTiming(), mode: Mode = Mode.STANDARD) -> Throughput:
    payload = timing.frame_clock_hz * mode.payload_bits
    line = timing.line_rate_bps
    return Throughput(payload, line, payload / line)
