"""Byte-stream transport: session wire format, TX/RX endpoints, fault proxy.

Wire format (all integers big-endian)::

    session header
      4s   magic  b"GBTE"
      u8   version (1)
      u8   mode       0 = standard, 1 = no-FEC
      u8   crypto     0 = off, 1 = AES (pre-shared key), 2 = RSA-wrapped AES
      u8   flags      bit 0 interleaver on, bit 1 payload is the seeded test pattern
      u64  nonce
      4xu16 scrambler lane seeds
      u64  payload seed
      u16  key blob length, then the blob (empty unless crypto = RSA):
             u8 AES key length, u8 chunk count, u16 chunk width in bytes,
             chunks (RSA ciphertexts, most significant key bits first)
    data
      repeated: u32 byte count, that many bytes of frame bitstream
      u32 0 sentinel
      u64 number of frames the transmitter sent

Frames are 15 bytes each, frame bit 0 = MSB of the first byte.  The proxy
only touches data bytes; the header, counts and trailer pass unmodified.
The same format is used for the file sink.
"""
from __future__ import annotations

import logging
import socket
import struct
from dataclasses import dataclass
from typing import BinaryIO

import numpy as np

from .channel import Channel, ChannelModel
from .crypt import AesKey, WrappedKey, unwrap_session_key, wrap_session_key
from .frame import Mode, frames_to_bytes
from .pipeline import (
    Crypto,
    LinkConfig,
    LinkStats,
    PayloadSource,
    Receiver,
    ReferenceStream,
    encode_frames,
)
from .scramble import LaneBank

log = logging.getLogger(__name__)

MAGIC = b"GBTE"
VERSION = 1
_FIXED = struct.Struct(">4sBBBBQ4HQH")
_MODES = [Mode.STANDARD, Mode.NOFEC]
_CRYPTO = [Crypto.OFF, Crypto.AES, Crypto.RSA]
FLAG_INTERLEAVE = 1
FLAG_SEEDED_PAYLOAD = 2


class ProtocolError(Exception):
    pass


def _read_exact(inp: BinaryIO, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = inp.read(n - len(buf))
        if not chunk:
            raise ProtocolError(f"stream ended after {len(buf)} of {n} bytes")
        buf += chunk
    return buf


@dataclass(frozen=True)
class SessionHeader:
    mode: Mode
    crypto: Crypto
    interleave_on: bool
    nonce: int
    seeds: tuple[int, ...]
    payload_seed: int
    seeded_payload: bool = True
    wrapped_key: WrappedKey | None = None

    @classmethod
    def for_config(cls, cfg: LinkConfig, seeded_payload: bool = True) -> "SessionHeader":
        wrapped = wrap_session_key(cfg.rsa.public, cfg.aes_key) if cfg.crypto is Crypto.RSA else None
        return cls(cfg.mode, cfg.crypto, cfg.interleave_on, cfg.nonce, tuple(cfg.scramble_seeds),
                   cfg.payload_seed, seeded_payload, wrapped)

    def _key_blob(self) -> bytes:
        if self.wrapped_key is None:
            return b""
        w = self.wrapped_key
        width = max((c.bit_length() + 7) // 8 for c in w.chunks)
        body = b"".join(c.to_bytes(width, "big") for c in w.chunks)
        return struct.pack(">BBH", w.key_len, len(w.chunks), width) + body

    def to_bytes(self) -> bytes:
        flags = (FLAG_INTERLEAVE if self.interleave_on else 0) | (FLAG_SEEDED_PAYLOAD if self.seeded_payload else 0)
        blob = self._key_blob()
        return _FIXED.pack(MAGIC, VERSION, _MODES.index(self.mode), _CRYPTO.index(self.crypto), flags,
                           self.nonce, *self.seeds, self.payload_seed, len(blob)) + blob

    @classmethod
    def read(cls, inp: BinaryIO) -> tuple["SessionHeader", bytes]:
        """Parse a header; also returns its raw bytes for forwarding."""
        raw = _read_exact(inp, _FIXED.size)
        magic, version, mode, crypto, flags, nonce, s0, s1, s2, s3, pseed, blob_len = _FIXED.unpack(raw)
        if magic != MAGIC:
            raise ProtocolError(f"bad magic {magic!r}")
        if version != VERSION:
            raise ProtocolError(f"unsupported version {version}")
        if mode >= len(_MODES) or crypto >= len(_CRYPTO):
            raise ProtocolError("unknown mode or crypto code")
        blob = _read_exact(inp, blob_len) if blob_len else b""
        wrapped = None
        if blob:
            key_len, count, width = struct.unpack_from(">BBH", blob)
            if len(blob) != 4 + count * width:
                raise ProtocolError("key blob length mismatch")
            chunks = tuple(int.from_bytes(blob[4 + i * width:4 + (i + 1) * width], "big") for i in range(count))
            wrapped = WrappedKey(key_len, chunks)
        if _CRYPTO[crypto] is Crypto.RSA and wrapped is None:
            raise ProtocolError("RSA session without a wrapped key")
        hdr = cls(_MODES[mode], _CRYPTO[crypto], bool(flags & FLAG_INTERLEAVE), nonce,
                  (s0, s1, s2, s3), pseed, bool(flags & FLAG_SEEDED_PAYLOAD), wrapped)
        return hdr, raw + blob

    def apply_to(self, local: LinkConfig) -> LinkConfig:
        return local.replace(mode=self.mode, crypto=self.crypto, interleave_on=self.interleave_on,
                             nonce=self.nonce, scramble_seeds=self.seeds, payload_seed=self.payload_seed)

    def session_key(self, local: LinkConfig) -> AesKey | None:
        if self.crypto is Crypto.RSA:
            return unwrap_session_key(local.rsa, self.wrapped_key)
        return local.aes_key if self.crypto is Crypto.AES else None


# -- stream-level operations ---------------------------------------------------

def _send_chunk(out: BinaryIO, data: bytes):
    out.write(struct.pack(">I", len(data)))
    if data:
        out.write(data)


def _chunks(inp: BinaryIO):
    """Yield data chunks until the sentinel; then return the frame-count trailer."""
    while True:
        (n,) = struct.unpack(">I", _read_exact(inp, 4))
        if n == 0:
            (frames,) = struct.unpack(">Q", _read_exact(inp, 8))
            return frames
        yield _read_exact(inp, n)


def write_session(out: BinaryIO, cfg: LinkConfig, n_frames: int | None,
                  payload_source: PayloadSource | None = None, chunk_frames: int = 512,
                  payloads: np.ndarray | None = None) -> int:
    """Write a full session: header, frame chunks, sentinel, trailer.

    With ``n_frames=None`` the writer streams until the peer goes away.
    Passing explicit ``payloads`` marks the session as not carrying the
    seeded test pattern.
    """
    seeded = payloads is None
    source = payload_source or PayloadSource(cfg.payload_seed, cfg.mode)
    out.write(SessionHeader.for_config(cfg, seeded).to_bytes())
    bank = LaneBank(cfg.scramble_seeds)
    cipher = cfg.cipher()
    sent = 0
    try:
        while n_frames is None or sent < n_frames:
            if payloads is not None:
                take = payloads[sent:sent + chunk_frames]
            else:
                count = chunk_frames if n_frames is None else min(chunk_frames, n_frames - sent)
                take = source.take(count)
            if not len(take):
                break
            batch = encode_frames(cfg, take, bank, cipher)
            _send_chunk(out, frames_to_bytes(batch.frames))
            sent += len(take)
        _send_chunk(out, b"")
        out.write(struct.pack(">Q", sent))
        out.flush()
    except (BrokenPipeError, ConnectionResetError) as exc:
        log.warning("transmitter: connection lost after %d frames (%s)", sent, exc)
    return sent


def read_session(inp: BinaryIO, local: LinkConfig | None = None, keep_log: bool = False):
    """Receive a session; returns (LinkStats, Receiver)."""
    local = local or LinkConfig()
    hdr, _ = SessionHeader.read(inp)
    cfg = hdr.apply_to(local)
    reference = ReferenceStream(cfg) if hdr.seeded_payload else None
    rx = Receiver(cfg, reference, hdr.session_key(local), keep_log)
    chunks = _chunks(inp)
    while True:
        try:
            data = next(chunks)
        except StopIteration as stop:
            rx.stats.frames_sent = stop.value
            break
        rx.feed(np.unpackbits(np.frombuffer(data, dtype=np.uint8)))
    return rx.stats, rx


def proxy_session(inp: BinaryIO, out: BinaryIO, model: ChannelModel, junk_bits: int = 0) -> int:
    """Forward one session, injecting channel errors into the frame bytes only.

    ``junk_bits`` zero bits are prepended to the frame bitstream (before the
    channel), shifting every frame off byte alignment; the tail is padded
    to a whole byte.  Returns the number of channel flips applied.
    """
    _, raw = SessionHeader.read(inp)
    out.write(raw)
    channel = Channel(model)
    pending = np.zeros(junk_bits, dtype=np.uint8)  # junk, not yet through the channel
    carry = np.zeros(0, dtype=np.uint8)  # channel output short of a whole byte
    flips = 0
    chunks = _chunks(inp)
    while True:
        try:
            data = next(chunks)
        except StopIteration as stop:
            sent = stop.value
            break
        bits = np.concatenate([pending, np.unpackbits(np.frombuffer(data, dtype=np.uint8))])
        pending = pending[:0]
        noisy, flipped = channel.apply(bits)
        flips += flipped.size
        noisy = np.concatenate([carry, noisy])
        whole = noisy.size // 8 * 8
        carry = noisy[whole:]
        if whole:
            _send_chunk(out, np.packbits(noisy[:whole]).tobytes())
        out.flush()
    if carry.size:
        pad = np.zeros(8 - carry.size, dtype=np.uint8)
        _send_chunk(out, np.packbits(np.concatenate([carry, pad])).tobytes())
    _send_chunk(out, b"")
    out.write(struct.pack(">Q", sent))
    out.flush()
    return flips


# -- network endpoints -------------------------------------------------------------

class TxEndpoint:
    """Transmitter board: accepts one connection and streams a session to it."""

    def __init__(self, bind_addr, cfg: LinkConfig, n_frames: int | None = None,
                 payload_source: PayloadSource | None = None):
        self.cfg = cfg
        self.n_frames = n_frames
        self.payload_source = payload_source
        self.sock = socket.create_server(bind_addr)
        self.address = self.sock.getsockname()[:2]

    def serve(self) -> int:
        with self.sock:
            conn, peer = self.sock.accept()
            log.info("transmitter: connection from %s", peer)
            with conn, conn.makefile("wb") as out:
                return write_session(out, self.cfg, self.n_frames, self.payload_source)


class ProxyEndpoint:
    """The fibre: accepts the receiver, dials the transmitter, corrupts frame bytes."""

    def __init__(self, listen_addr, upstream_addr, model: ChannelModel, junk_bits: int = 0):
        self.upstream_addr = tuple(upstream_addr)
        self.model = model
        self.junk_bits = junk_bits
        self.sock = socket.create_server(listen_addr)
        self.address = self.sock.getsockname()[:2]

    def serve(self) -> int:
        with self.sock:
            down, _ = self.sock.accept()
            with down, socket.create_connection(self.upstream_addr) as up, \
                    up.makefile("rb") as inp, down.makefile("wb") as out:
                try:
                    return proxy_session(inp, out, self.model, self.junk_bits)
                except ProtocolError as exc:
                    log.warning("proxy: upstream session ended early (%s)", exc)
                    return -1


def serve_tx(bind_addr, cfg: LinkConfig, payload_source: PayloadSource | None = None,
             n_frames: int | None = None) -> int:
    return TxEndpoint(bind_addr, cfg, n_frames, payload_source).serve()


def run_proxy(listen_addr, upstream_addr, model: ChannelModel, junk_bits: int = 0) -> int:
    return ProxyEndpoint(listen_addr, upstream_addr, model, junk_bits).serve()


def run_rx(connect_addr, local: LinkConfig | None = None, keep_log: bool = False):
    """Receiver board: connect, read one session, return (LinkStats, Receiver)."""
    with socket.create_connection(tuple(connect_addr)) as sock, sock.makefile("rb") as inp:
        return read_session(inp, local, keep_log)


# -- key files -----------------------------------------------------------------------

KEY_FIELDS = ("aes_key", "nonce", "rsa_p", "rsa_q", "rsa_e")


def load_key_file(path, base: LinkConfig | None = None) -> LinkConfig:
    """Read ``name = hex`` lines (``#`` comments allowed) into a config.

    Recognised names: aes_key, nonce, rsa_p, rsa_q, rsa_e.  The RSA pair is
    rebuilt from p, q, e.
    """
    from .crypt import rsa_keygen

    base = base or LinkConfig()
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            name, sep, value = (p.strip() for p in line.partition("="))
            if not sep or name not in KEY_FIELDS:
                raise ValueError(f"{path}:{lineno}: expected one of {KEY_FIELDS} = <hex>")
            values[name] = value
    changes = {}
    if "aes_key" in values:
        changes["aes_key"] = AesKey(bytes.fromhex(values["aes_key"]))
    if "nonce" in values:
        changes["nonce"] = int(values["nonce"], 16)
    if {"rsa_p", "rsa_q"} <= values.keys():
        e = int(values.get("rsa_e", "10001"), 16)
        changes["rsa"] = rsa_keygen(int(values["rsa_p"], 16), int(values["rsa_q"], 16), e)
    return base.replace(**changes)

