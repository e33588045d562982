"""Transmit and receive chains and the link measurement loop.

TX (standard):  scramble 52 bits -> prepend header -> 8 x BCH(15,7)
                -> interleave -> mask (optional)
TX (no FEC):    scramble 116 bits -> prepend header -> mask (optional)
RX:             align -> unmask -> de-interleave -> decode -> descramble

Everything works on batches of frames; the single-frame helpers
``tx_frame``/``rx_frame`` are thin wrappers over the batch code.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import gf16bch
from .align import AlignedWindow, Event, FrameAligner
from .channel import Channel, ChannelModel, ErrorTrace
from .crypt import (
    DEMO_AES_KEY,
    DEMO_NONCE,
    DEMO_RSA,
    AesKey,
    FrameCipherState,
    RsaKeyPair,
    mask_frames,
    unwrap_session_key,
    wrap_session_key,
)
from .frame import BODY_BITS, FRAME_BITS, HEADER_BITS, SC_BITS, LinkTiming, Mode
from .interleave import deinterleave, interleave
from .scramble import DEFAULT_SEED, N_LANES, LaneBank, descramble_payload, scramble_payload

N_CODEWORDS = 8


class Crypto(Enum):
    OFF = "off"
    AES = "aes"
    RSA = "rsa"  # RSA-wrapped AES session key, AES keystream on frames


@dataclass(frozen=True)
class LinkConfig:
    mode: Mode = Mode.STANDARD
    crypto: Crypto = Crypto.OFF
    interleave_on: bool = True
    scramble_seeds: tuple[int, ...] = (DEFAULT_SEED,) * N_LANES
    channel: ChannelModel = ChannelModel()
    timing: LinkTiming = LinkTiming()
    aes_key: AesKey = DEMO_AES_KEY
    nonce: int = DEMO_NONCE
    rsa: RsaKeyPair = DEMO_RSA
    payload_seed: int = 0
    junk_bits: int = 0

    def __post_init__(self):
        if len(self.scramble_seeds) != N_LANES:
            raise ValueError(f"need {N_LANES} scrambler seeds")
        if not 0 <= self.junk_bits < FRAME_BITS:
            raise ValueError(f"junk_bits must be in [0, {FRAME_BITS})")

    def replace(self, **kw) -> "LinkConfig":
        return dataclasses.replace(self, **kw)

    def cipher(self, key: AesKey | None = None) -> FrameCipherState | None:
        if self.crypto is Crypto.OFF:
            return None
        return FrameCipherState(key or self.aes_key, self.nonce)


class PayloadSource:
    """Seeded random payloads: ``default_rng((seed, 0x504C))`` integers in {0, 1}."""

    def __init__(self, seed: int = 0, mode: Mode = Mode.STANDARD):
        self.mode = mode
        self.rng = np.random.default_rng((seed, 0x504C))

    def take(self, n: int) -> np.ndarray:
        return self.rng.integers(0, 2, size=(n, self.mode.payload_bits), dtype=np.uint8)


@dataclass
class TxBatch:
    payloads: np.ndarray  # (n, payload_bits) source bits
    coded: np.ndarray  # (n, 120) before interleaving and masking
    frames: np.ndarray  # (n, 120) on the wire


def encode_frames(cfg: LinkConfig, payloads, bank: LaneBank,
                  cipher: FrameCipherState | None = None) -> TxBatch:
    """Run a batch of payloads through the TX chain, in frame order.

    ``bank`` state and ``cipher.frame_counter`` advance by the batch.
    """
    payloads = np.asarray(payloads, dtype=np.uint8).reshape(-1, cfg.mode.payload_bits)
    n = payloads.shape[0]
    scrambled = scramble_payload(bank, payloads)
    header = np.broadcast_to(np.array(cfg.mode.header, dtype=np.uint8), (n, HEADER_BITS))
    if cfg.mode is Mode.STANDARD:
        messages = np.concatenate([header, scrambled], axis=1).reshape(n, N_CODEWORDS, gf16bch.K)
        coded = gf16bch.encode_many(messages).reshape(n, FRAME_BITS)
        frames = interleave(coded) if cfg.interleave_on else coded.copy()
    else:
        coded = np.concatenate([header, scrambled], axis=1)
        frames = coded.copy()
    if cipher is not None:
        frames = mask_frames(cipher, frames, range(cipher.frame_counter, cipher.frame_counter + n))
        cipher.frame_counter += n
    return TxBatch(payloads, coded, frames)


@dataclass
class RxBatch:
    payloads: np.ndarray  # (n, payload_bits) recovered
    coded: np.ndarray  # (n, 120) after unmask + de-interleave, before decoding
    messages: np.ndarray  # (n, 8, 7) decoded messages (standard only)
    corrected: np.ndarray  # (n,) bits corrected per frame
    uncorrectable: np.ndarray  # (n, 8) flags per codeword


def decode_frames(cfg: LinkConfig, frames, bank: LaneBank,
                  cipher: FrameCipherState | None = None, counters=None) -> RxBatch:
    frames = np.asarray(frames, dtype=np.uint8).reshape(-1, FRAME_BITS)
    n = frames.shape[0]
    if cipher is not None:
        if counters is None:
            counters = range(cipher.frame_counter, cipher.frame_counter + n)
            cipher.frame_counter += n
        frames = mask_frames(cipher, frames, counters)
    if cfg.mode is Mode.STANDARD:
        coded = deinterleave(frames) if cfg.interleave_on else frames.copy()
        msgs, counts, bad = gf16bch.decode_many(coded.reshape(n, N_CODEWORDS, gf16bch.N))
        scrambled = msgs.reshape(n, N_CODEWORDS * gf16bch.K)[:, HEADER_BITS:]
        corrected = counts.sum(axis=1)
    else:
        coded = frames.copy()
        msgs = np.zeros((n, 0, gf16bch.K), dtype=np.uint8)
        scrambled = coded[:, HEADER_BITS:]
        corrected = np.zeros(n, dtype=np.int64)
        bad = np.zeros((n, 0), dtype=bool)
    payloads = descramble_payload(bank, scrambled)
    return RxBatch(payloads, coded, msgs, corrected, bad)


def _split_payload(cfg: LinkConfig, sc, data) -> np.ndarray:
    sc = np.asarray(sc, dtype=np.uint8)
    data = np.asarray(data, dtype=np.uint8)
    if sc.shape != (SC_BITS,) or data.shape != (cfg.mode.data_bits,):
        raise ValueError(f"{cfg.mode.value} frames take 4 SC bits and {cfg.mode.data_bits} data bits")
    return np.concatenate([sc, data])


def tx_frame(cfg: LinkConfig, sc, data, bank: LaneBank,
             cipher: FrameCipherState | None = None) -> np.ndarray:
    return encode_frames(cfg, _split_payload(cfg, sc, data), bank, cipher).frames[0]


@dataclass
class FrameStats:
    errors_corrected: int
    uncorrectable_codewords: int


def rx_frame(cfg: LinkConfig, frame, bank: LaneBank, cipher: FrameCipherState | None = None):
    """Decode one aligned frame: returns (sc, data, FrameStats)."""
    out = decode_frames(cfg, frame, bank, cipher)
    payload = out.payloads[0]
    stats = FrameStats(int(out.corrected[0]), int(out.uncorrectable[0].sum()))
    return payload[:SC_BITS], payload[SC_BITS:], stats


# -- measurement -------------------------------------------------------------

@dataclass
class LinkStats:
    frames_sent: int = 0
    frames_received: int = 0  # frames decoded while locked
    payload_bits: int = 0
    coded_bits: int = 0  # channel bits compared for pre-FEC BER (116 per frame)
    pre_fec_bit_errors: int = 0
    post_fec_bit_errors: int = 0
    corrected_bits: int = 0
    codewords: int = 0
    codeword_failures: int = 0
    frames_uncorrectable: int = 0
    frames_in_error: int = 0
    lock_events: int = 0
    lock_lost_events: int = 0
    lock_frames: int | None = None  # frames consumed up to the first lock

    # rates are NaN when nothing was received (e.g. the link never locked)
    @property
    def pre_ber(self) -> float:
        return self.pre_fec_bit_errors / self.coded_bits if self.coded_bits else math.nan

    @property
    def post_ber(self) -> float:
        return self.post_fec_bit_errors / self.payload_bits if self.payload_bits else math.nan

    @property
    def fer(self) -> float:
        return self.frames_in_error / self.frames_received if self.frames_received else math.nan

    @property
    def codeword_failure_rate(self) -> float:
        return self.codeword_failures / self.codewords if self.codewords else math.nan


class ReferenceStream:
    """What the transmitter sent, regenerated on demand from the session seeds."""

    def __init__(self, cfg: LinkConfig, source: PayloadSource | None = None):
        self.cfg = cfg
        self.source = source or PayloadSource(cfg.payload_seed, cfg.mode)
        self.bank = LaneBank(cfg.scramble_seeds)
        self.size = 0
        self._payload_arr = np.zeros((0, cfg.mode.payload_bits), dtype=np.uint8)
        self._coded_arr = np.zeros((0, FRAME_BITS), dtype=np.uint8)

    @classmethod
    def from_batch(cls, cfg: LinkConfig, batch: TxBatch) -> "ReferenceStream":
        ref = cls(cfg)
        ref._payload_arr = batch.payloads
        ref._coded_arr = batch.coded
        ref.size = batch.payloads.shape[0]
        ref.source = None
        return ref

    def _extend(self, upto: int):
        if upto <= self.size or self.source is None:
            return
        n = max(upto - self.size, 1024)
        batch = encode_frames(self.cfg, self.source.take(n), self.bank)
        self._payload_arr = np.concatenate([self._payload_arr, batch.payloads])
        self._coded_arr = np.concatenate([self._coded_arr, batch.coded])
        self.size += n

    def get(self, idx: np.ndarray):
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size:
            self._extend(int(idx.max()) + 1)
        return self._payload_arr[idx], self._coded_arr[idx]


_DECODED = (Event.HEADER_SEEN, Event.LOCK_ACQUIRED, Event.IN_LOCK, Event.HEADER_MISS)
_COUNTED = (Event.LOCK_ACQUIRED, Event.IN_LOCK, Event.HEADER_MISS)


class Receiver:
    """Streaming receiver: feed it channel bits in any chunking.

    Frames are decoded from the first header seen (so the descrambler is in
    sync by the time lock is declared), but only frames handled in lock
    count toward the statistics.  A window at stream position 120k + offset
    is treated as transmitted frame k, which also selects its keystream
    counter; this holds for junk prefixes shorter than one frame.
    """

    def __init__(self, cfg: LinkConfig, reference: ReferenceStream | None = None,
                 session_key: AesKey | None = None, keep_log: bool = False):
        self.cfg = cfg
        self.reference = reference
        self.aligner = FrameAligner()
        self.bank = LaneBank(cfg.scramble_seeds)
        self.cipher = cfg.cipher(session_key)
        self.stats = LinkStats()
        self.log: list[str] | None = [] if keep_log else None
        self.received_payloads: list[np.ndarray] = []

    def feed(self, bits) -> None:
        windows = self.aligner.feed(bits)
        if self.log is not None:
            self.log.extend(w.log_line() for w in windows)
        for w in windows:
            if w.event is Event.LOCK_ACQUIRED:
                self.stats.lock_events += 1
                if self.stats.lock_frames is None:
                    self.stats.lock_frames = w.frame_idx + 1
            elif w.event is Event.LOCK_LOST:
                self.stats.lock_lost_events += 1
        todo = [w for w in windows if w.event in _DECODED]
        if todo:
            self._decode(todo)

    def _decode(self, windows: list[AlignedWindow]):
        frames = np.stack([w.bits for w in windows])
        idx = np.array([w.frame_idx for w in windows], dtype=np.int64)
        out = decode_frames(self.cfg, frames, self.bank, self.cipher, counters=idx.tolist())
        counted = np.array([w.event in _COUNTED for w in windows])
        if not counted.any():
            return
        payloads = out.payloads[counted]
        self.received_payloads.append(payloads)
        s = self.stats
        n = int(counted.sum())
        s.frames_received += n
        s.payload_bits += n * self.cfg.mode.payload_bits
        s.coded_bits += n * BODY_BITS
        s.corrected_bits += int(out.corrected[counted].sum())
        s.frames_uncorrectable += int(out.uncorrectable[counted].any(axis=1).sum())
        if self.reference is None:
            return
        ref_payload, ref_coded = self.reference.get(idx[counted])
        s.pre_fec_bit_errors += int((out.coded[counted][:, HEADER_BITS:] != ref_coded[:, HEADER_BITS:]).sum())
        payload_err = (payloads != ref_payload).sum(axis=1)
        s.post_fec_bit_errors += int(payload_err.sum())
        s.frames_in_error += int((payload_err > 0).sum())
        if self.cfg.mode is Mode.STANDARD:
            ref_msgs = ref_coded.reshape(n, N_CODEWORDS, gf16bch.N)[..., :gf16bch.K]
            wrong = (out.messages[counted] != ref_msgs).any(axis=2) | out.uncorrectable[counted]
            s.codewords += n * N_CODEWORDS
            s.codeword_failures += int(wrong.sum())


def session_key_for(cfg: LinkConfig) -> AesKey | None:
    """The AES key the receiver ends up with, after the RSA exchange when enabled."""
    if cfg.crypto is Crypto.RSA:
        return unwrap_session_key(cfg.rsa, wrap_session_key(cfg.rsa.public, cfg.aes_key))
    return cfg.aes_key if cfg.crypto is Crypto.AES else None


def serialize(frames: np.ndarray, junk_bits: int = 0) -> np.ndarray:
    """Word-mux frames onto one bitstream, optionally behind ``junk_bits`` zeros."""
    stream = np.asarray(frames, dtype=np.uint8).reshape(-1)
    if junk_bits:
        stream = np.concatenate([np.zeros(junk_bits, dtype=np.uint8), stream])
    return stream


@dataclass
class LinkRun:
    stats: LinkStats
    trace: ErrorTrace
    tx: TxBatch
    log: list[str] = field(default_factory=list)


def simulate_link(cfg: LinkConfig, n_frames: int, payload_source: PayloadSource | None = None,
                  keep_log: bool = False) -> LinkRun:
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    source = payload_source or PayloadSource(cfg.payload_seed, cfg.mode)
    tx = encode_frames(cfg, source.take(n_frames), LaneBank(cfg.scramble_seeds), cfg.cipher())
    stream = serialize(tx.frames, cfg.junk_bits)
    noisy, flipped = Channel(cfg.channel).apply(stream)
    rx = Receiver(cfg, ReferenceStream.from_batch(cfg, tx), session_key_for(cfg), keep_log)
    rx.feed(noisy)
    rx.stats.frames_sent = n_frames
    return LinkRun(rx.stats, ErrorTrace(flipped, stream.size), tx, rx.log or [])


def run_link(cfg: LinkConfig, n_frames: int, payload_source: PayloadSource | None = None) -> LinkStats:
    return simulate_link(cfg, n_frames, payload_source).stats
