"""Command-line front end: ``gbtemu <subcommand> ...``."""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import linkio
from .align import CONFIRM_HEADERS
from .bench import SweepSpec, config_matrix, ebn0_grid, run_sweep, throughput_report, timed_run, write_csv
from .channel import ChannelModel, Kind
from .crypt import AesKey, aes_encrypt_block
from .frame import Mode, frames_to_bytes
from .gf16bch import K, encode_many
from .interleave import build_map
from .pipeline import Crypto, LinkConfig, simulate_link, tx_frame
from .scramble import DEFAULT_SEED, LaneBank, ScramblerLane, scramble_lane


def _addr(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    try:
        return host or "127.0.0.1", int(port)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected host:port, got {text!r}")


def _grid(text: str) -> tuple[float, ...]:
    """``start:stop:step`` or a comma list."""
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        return ebn0_grid(start, stop, step)
    return tuple(float(x) for x in text.split(","))


def _link_flags(p: argparse.ArgumentParser):
    p.add_argument("--mode", choices=[m.value for m in Mode], default="standard")
    p.add_argument("--crypto", choices=[c.value for c in Crypto], default="off")
    p.add_argument("--no-interleave", action="store_true", help="bypass the interleaver")
    p.add_argument("--key-file", help="key material: lines of name = hex (aes_key, nonce, rsa_p, rsa_q, rsa_e)")
    p.add_argument("--payload-seed", type=int, default=0, help="seed of the test-pattern payload")


def _channel_flags(p: argparse.ArgumentParser, default_model="bsc"):
    p.add_argument("--model", choices=[k.value for k in Kind], default=default_model)
    p.add_argument("--p", type=float, default=0.0, help="bit-flip probability (mean rate for burst/poisson)")
    p.add_argument("--ebn0", type=float, help="Eb/N0 in dB for the awgn model")
    p.add_argument("--burst-len", type=int, default=2)
    p.add_argument("--seed", type=int, default=0, help="channel RNG seed")


def _config(args) -> LinkConfig:
    cfg = LinkConfig(mode=Mode(args.mode), crypto=Crypto(args.crypto),
                     interleave_on=not args.no_interleave, payload_seed=args.payload_seed)
    if args.key_file:
        cfg = linkio.load_key_file(args.key_file, cfg)
    return cfg


def _channel(args) -> ChannelModel:
    kind = Kind(args.model)
    if kind is Kind.AWGN:
        if args.ebn0 is None:
            raise SystemExit("error: --model awgn needs --ebn0")
        return ChannelModel.awgn(args.ebn0, args.seed)
    if kind is Kind.BURST:
        return ChannelModel.burst(args.p / args.burst_len, args.burst_len, args.seed)
    if kind is Kind.POISSON:
        return ChannelModel.poisson(args.p, seed=args.seed)
    return ChannelModel.bsc(args.p, args.seed)


def _print_stats(stats, out=None):
    out = out or sys.stdout
    for name, value in vars(stats).items():
        print(f"{name}={value}", file=out)
    for name in ("pre_ber", "post_ber", "fer", "codeword_failure_rate"):
        print(f"{name}={getattr(stats, name):.6g}", file=out)


# -- subcommands -----------------------------------------------------------------

def cmd_encode(args) -> int:
    cfg = _config(args)
    payloads = None
    if args.input:
        with open(args.input, "rb") as fh:
            bits = np.unpackbits(np.frombuffer(fh.read(), dtype=np.uint8))
        width = cfg.mode.payload_bits
        bits = np.concatenate([np.zeros(CONFIRM_HEADERS * width, dtype=np.uint8), bits,
                               np.zeros(-bits.size % width, dtype=np.uint8)])
        payloads = bits.reshape(-1, width)
    with open(args.output, "wb") as out:
        n = linkio.write_session(out, cfg, args.frames if payloads is None else len(payloads), payloads=payloads)
    print(f"wrote {n} frames to {args.output}", file=sys.stderr)
    return 0


def cmd_decode(args) -> int:
    with open(args.input, "rb") as inp:
        stats, rx = linkio.read_session(inp, _config(args))
    if args.output:
        got = np.concatenate(rx.received_payloads) if rx.received_payloads else np.zeros((0,), np.uint8)
        with open(args.output, "wb") as out:
            out.write(np.packbits(got.reshape(-1)).tobytes())
    _print_stats(stats)
    return 0


def cmd_roundtrip(args) -> int:
    cfg = _config(args).replace(channel=_channel(args), junk_bits=args.prepend_junk_bits)
    run = simulate_link(cfg, args.frames)
    _print_stats(run.stats)
    if run.stats.frames_received and run.stats.post_fec_bit_errors == 0:
        print("payload match")
        return 0
    print("payload mismatch")
    return 1


def cmd_sweep(args) -> int:
    kind = Kind(args.model)
    axis = "p" if args.p_grid else "ebn0"
    grid = _grid(args.p_grid) if args.p_grid else (_grid(args.ebn0) if args.ebn0 else ebn0_grid())
    interleave = {"on": (True,), "off": (False,), "both": (True, False)}[args.interleave]
    modes = tuple(Mode) if args.mode == "all" else (Mode(args.mode),)
    spec = SweepSpec(grid, args.frames, config_matrix(modes, interleave, (Crypto(args.crypto),)),
                     axis, kind, args.burst_len, args.seed, args.timed, args.workers)
    rows = run_sweep(spec)
    if args.output:
        with open(args.output, "w") as fh:
            write_csv(rows, fh)
    else:
        write_csv(rows, sys.stdout)
    return 0


def cmd_bench(args) -> int:
    cfg = _config(args).replace(channel=_channel(args))
    for line in throughput_report(timed_run(cfg, args.frames)).lines():
        print(line)
    return 0


def cmd_tx(args) -> int:
    ep = linkio.TxEndpoint(args.bind, _config(args), args.frames)
    print(f"transmitter listening on {ep.address[0]}:{ep.address[1]}", file=sys.stderr, flush=True)
    ep.serve()
    return 0


def cmd_rx(args) -> int:
    stats, rx = linkio.run_rx(args.connect, _config(args), keep_log=bool(args.log))
    if args.log:
        with open(args.log, "w") as fh:
            fh.write("\n".join(rx.log) + "\n")
    _print_stats(stats)
    return 0


def cmd_proxy(args) -> int:
    ep = linkio.ProxyEndpoint(args.listen, args.upstream, _channel(args), args.prepend_junk_bits)
    print(f"proxy listening on {ep.address[0]}:{ep.address[1]}", file=sys.stderr, flush=True)
    flips = ep.serve()
    print(f"flipped {flips} bits", file=sys.stderr)
    return 0


def cmd_dump_map(args) -> int:
    sys.stdout.write(build_map().dump())
    return 0


def golden_vectors() -> str:
    """Deterministic conformance vectors for other implementations."""
    def bits(a):
        return "".join(str(int(b)) for b in a)

    messages = (np.arange(1 << K)[:, None] >> np.arange(K - 1, -1, -1)) & 1
    lines = ["# bch15_7 codebook: message codeword (bit 0 first)"]
    for cw in encode_many(messages.astype(np.uint8)):
        lines.append(f"{bits(cw[:7])} {bits(cw)}")
    lines.append("# interleaver map: input output")
    lines += build_map().dump().splitlines()
    lines.append("# aes known answer: key plaintext ciphertext")
    pt = bytes.fromhex("00112233445566778899aabbccddeeff")
    for n in (16, 24, 32):
        key = bytes(range(n))
        lines.append(f"{key.hex()} {pt.hex()} {aes_encrypt_block(AesKey(key), pt).hex()}")
    lines.append(f"# scrambler lane, seed {DEFAULT_SEED:#06x}, zero input, first 256 bits")
    lines.append(bits(scramble_lane(ScramblerLane(DEFAULT_SEED), np.zeros(256, dtype=np.uint8))))
    lines.append("# first frame per mode/interleave/crypto: sc=1011, data=10001 repeated to 48 bits, tiled for no-FEC, default keys")
    pattern = np.resize(np.array([1, 0, 0, 0, 1], dtype=np.uint8), 48)
    for mode in Mode:
        for il in (True, False):
            for crypto in Crypto:
                cfg = LinkConfig(mode=mode, interleave_on=il, crypto=crypto)
                f = tx_frame(cfg, np.array([1, 0, 1, 1], dtype=np.uint8), np.resize(pattern, mode.data_bits),
                             LaneBank(), cfg.cipher())
                lines.append(f"{mode.value} il={int(il)} {crypto.value} {frames_to_bytes(f).hex()}")
    return "\n".join(lines) + "\n"


def cmd_vectors(args) -> int:
    sys.stdout.write(golden_vectors())
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gbtemu", description="Gigabit optical link emulator.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="write a session file")
    _link_flags(p)
    p.add_argument("--frames", type=int, default=1000)
    p.add_argument("--input", help="raw payload file; preceded by %d filler frames so a clean "
                                   "decode returns it exactly (zero padded)" % CONFIRM_HEADERS)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="receive a session file and report stats")
    _link_flags(p)
    p.add_argument("input")
    p.add_argument("-o", "--output", help="write delivered payload bits here")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("roundtrip", help="in-process tx -> channel -> rx")
    _link_flags(p)
    _channel_flags(p)
    p.add_argument("--frames", type=int, default=1000)
    p.add_argument("--prepend-junk-bits", type=int, default=0)
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("sweep", help="BER sweep, CSV to stdout")
    p.add_argument("--mode", choices=[m.value for m in Mode] + ["all"], default="standard")
    p.add_argument("--crypto", choices=[c.value for c in Crypto], default="off")
    p.add_argument("--interleave", choices=["on", "off", "both"], default="on")
    p.add_argument("--model", choices=[k.value for k in Kind], default="awgn")
    p.add_argument("--ebn0", help="Eb/N0 grid in dB, start:stop:step or a comma list (default 0:10:0.5)")
    p.add_argument("--p", dest="p_grid", help="crossover grid instead of Eb/N0 (not for awgn)")
    p.add_argument("--burst-len", type=int, default=2)
    p.add_argument("--frames", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timed", action="store_true", help="add seconds and frames/s columns")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", help="software throughput next to the model line rate")
    _link_flags(p)
    _channel_flags(p)
    p.add_argument("--frames", type=int, default=20000)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("tx", help="transmitter endpoint")
    _link_flags(p)
    p.add_argument("--bind", type=_addr, default=("127.0.0.1", 9500))
    p.add_argument("--frames", type=int, help="stop after this many frames (default: until closed)")
    p.set_defaults(func=cmd_tx)

    p = sub.add_parser("rx", help="receiver endpoint")
    _link_flags(p)
    p.add_argument("--connect", type=_addr, default=("127.0.0.1", 9501))
    p.add_argument("--log", help="write the aligner event log here")
    p.set_defaults(func=cmd_rx)

    p = sub.add_parser("proxy", help="error-injecting relay between tx and rx")
    _channel_flags(p)
    p.add_argument("--listen", type=_addr, default=("127.0.0.1", 9501))
    p.add_argument("--upstream", type=_addr, default=("127.0.0.1", 9500))
    p.add_argument("--prepend-junk-bits", type=int, default=0)
    p.set_defaults(func=cmd_proxy)

    p = sub.add_parser("dump-map", help="print the interleaver map")
    p.set_defaults(func=cmd_dump_map)

    p = sub.add_parser("vectors", help="print golden conformance vectors")
    p.set_defaults(func=cmd_vectors)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ValueError, OSError, linkio.ProtocolError) as exc:
        print(f"gbtemu: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
