"""BER sweeps and software throughput measurement.

Every grid point gets one channel seed (``spec.seed + point index``) shared by
all configurations at that point, so configs are compared on identical
error patterns.  Results come back in grid order, configs in spec order.

For the Eb/N0 axis the per-bit crossover is ``ebn0_to_p`` applied per
channel bit (no code-rate penalty).  Clustered models keep the same mean
bit-flip rate: Burst uses ``event_rate = p / burst_len``, Poisson uses
``lam = p``.
"""
from __future__ import annotations

import csv
import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import ChannelModel, Kind, ebn0_to_p
from .frame import Mode, throughput
from .pipeline import Crypto, LinkConfig, LinkStats, run_link

CSV_COLUMNS = ("ebn0_db", "p", "mode", "crypto", "frames", "pre_ber", "post_ber", "fer", "lock_frames")


def ebn0_grid(start: float = 0.0, stop: float = 10.0, step: float = 0.5) -> tuple[float, ...]:
    n = int(round((stop - start) / step)) + 1
    return tuple(float(x) for x in np.round(start + step * np.arange(n), 10))


def config_matrix(modes=(Mode.STANDARD,), interleave=(True,), cryptos=(Crypto.OFF,)) -> tuple[LinkConfig, ...]:
    return tuple(LinkConfig(mode=m, interleave_on=i, crypto=c)
                 for m, i, c in itertools.product(modes, interleave, cryptos))


@dataclass(frozen=True)
class SweepSpec:
    grid: tuple[float, ...]
    frames: int = 20000
    configs: tuple[LinkConfig, ...] = (LinkConfig(),)
    axis: str = "ebn0"  # or "p"
    model: Kind = Kind.AWGN
    burst_len: int = 2
    seed: int = 0
    timed: bool = False
    workers: int = 1

    def __post_init__(self):
        if not self.grid:
            raise ValueError("sweep grid is empty")
        if self.axis not in ("ebn0", "p"):
            raise ValueError(f"unknown axis {self.axis!r}")
        if self.frames < 1 or not self.configs:
            raise ValueError("need at least one frame and one config")
        if self.model is Kind.AWGN and self.axis == "p":
            raise ValueError("the AWGN model is driven by Eb/N0")

    def crossover(self, i: int) -> float:
        v = self.grid[i]
        return ebn0_to_p(v) if self.axis == "ebn0" else float(v)

    def channel(self, i: int) -> ChannelModel:
        seed = self.seed + i
        p = self.crossover(i)
        if self.model is Kind.AWGN:
            return ChannelModel.awgn(self.grid[i], seed)
        if self.model is Kind.BURST:
            return ChannelModel.burst(p / self.burst_len, self.burst_len, seed)
        if self.model is Kind.POISSON:
            return ChannelModel.poisson(p, seed=seed)
        return ChannelModel.bsc(p, seed)


@dataclass(frozen=True)
class SweepRow:
    ebn0_db: float | None
    p: float
    cfg: LinkConfig
    stats: LinkStats
    seconds: float | None = None

    @property
    def frames_per_sec(self) -> float | None:
        return self.stats.frames_sent / self.seconds if self.seconds else None


def _run_cell(args) -> SweepRow:
    spec, i, cfg = args
    t0 = time.perf_counter()
    stats = run_link(cfg.replace(channel=spec.channel(i)), spec.frames)
    seconds = time.perf_counter() - t0 if spec.timed else None
    ebn0 = spec.grid[i] if spec.axis == "ebn0" else None
    return SweepRow(ebn0, spec.crossover(i), cfg, stats, seconds)


def run_sweep(spec: SweepSpec) -> list[SweepRow]:
    cells = [(spec, i, cfg) for i in range(len(spec.grid)) for cfg in spec.configs]
    if spec.workers > 1:
        with ProcessPoolExecutor(spec.workers) as pool:
            return list(pool.map(_run_cell, cells))
    return [_run_cell(c) for c in cells]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "nan" if x != x else f"{x:.6g}"
    return str(x)


def write_csv(rows: list[SweepRow], out) -> None:
    """Write the stats CSV.

    An ``interleave`` column is appended when the rows mix interleaver
    settings; ``seconds,frames_per_sec`` are appended for timed rows.
    """
    mixed = len({r.cfg.interleave_on for r in rows}) > 1
    timed = any(r.seconds is not None for r in rows)
    header = list(CSV_COLUMNS) + (["interleave"] if mixed else []) + (["seconds", "frames_per_sec"] if timed else [])
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        s = r.stats
        line = [r.ebn0_db, r.p, r.cfg.mode.value, r.cfg.crypto.value, s.frames_sent,
                s.pre_ber, s.post_ber, s.fer, s.lock_frames]
        if mixed:
            line.append(int(r.cfg.interleave_on))
        if timed:
            line += [r.seconds, r.frames_per_sec]
        w.writerow([_fmt(x) for x in line])


@dataclass(frozen=True)
class ThroughputReport:
    frames: int
    seconds: float
    frames_per_sec: float
    measured_payload_bps: float
    model_payload_bps: float
    model_line_rate_bps: float

    def lines(self) -> list[str]:
        return [
            f"measured (software): {self.frames} frames in {self.seconds:.3f} s = "
            f"{self.frames_per_sec:.0f} frames/s, {self.measured_payload_bps / 1e6:.2f} Mbit/s payload",
            f"model (link timing): line rate {self.model_line_rate_bps / 1e9:g} Gbit/s, "
            f"payload {self.model_payload_bps / 1e9:g} Gbit/s",
        ]


def timed_run(cfg: LinkConfig, n_frames: int) -> SweepRow:
    t0 = time.perf_counter()
    stats = run_link(cfg, n_frames)
    return SweepRow(None, cfg.channel.crossover, cfg, stats, time.perf_counter() - t0)


def throughput_report(run: SweepRow) -> ThroughputReport:
    if not run.seconds:
        raise ValueError("run was not timed")
    model = throughput(run.cfg.timing, run.cfg.mode)
    fps = run.stats.frames_sent / run.seconds
    return ThroughputReport(run.stats.frames_sent, run.seconds, fps,
                            fps * run.cfg.mode.payload_bits, model.payload_bps, model.line_bps)
