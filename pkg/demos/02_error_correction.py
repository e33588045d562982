"""
How many errors does a frame survive?
=====================================

Each standard frame carries eight BCH(15,7) codewords, each fixing up to two
bit errors.  The interleaver turns a contiguous burst on the line into at
most two errors per codeword.
"""
import numpy as np

from gbtemu.interleave import build_map, deinterleave
from gbtemu.pipeline import LinkConfig, PayloadSource, decode_frames, encode_frames
from gbtemu.scramble import LaneBank

cfg = LinkConfig()
payload = PayloadSource(seed=1).take(1)
clean = encode_frames(cfg, payload, LaneBank()).frames[0]

# two flips inside every codeword, placed through the interleaver map
rng = np.random.default_rng(0)
perm = build_map().perm
flips = [perm[15 * cw + b] for cw in range(8) for b in rng.choice(15, 2, replace=False)]
hit = clean.copy()
hit[flips] ^= 1
out = decode_frames(cfg, hit, LaneBank())
print(f"{len(flips)} flips -> corrected {out.corrected[0]}, payload ok: {np.array_equal(out.payloads[0], payload[0])}")

# a third flip in one codeword is too many: the decoder either flags the
# word or, more often, lands on a neighbouring codeword without noticing
extra = next(perm[15 * 3 + b] for b in range(15) if perm[15 * 3 + b] not in flips)
hit[extra] ^= 1
out = decode_frames(cfg, hit, LaneBank())
print(f"{len(flips) + 1} flips -> flagged codewords {int(out.uncorrectable[0].sum())}, "
      f"payload ok: {np.array_equal(out.payloads[0], payload[0])}")

# bursts: how the interleaver spreads them over codewords
print()
print("burst  worst flips per codeword   (with interleaver / without)")
for length in range(1, 11):
    worst_on = worst_off = 0
    for start in range(13, 121 - length):
        mask = np.zeros(120, dtype=np.uint8)
        mask[start:start + length] = 1
        worst_on = max(worst_on, deinterleave(mask).reshape(8, 15).sum(axis=1).max())
        worst_off = max(worst_off, mask.reshape(8, 15).sum(axis=1).max())
    print(f"{length:5d}  {worst_on:2d} / {worst_off:2d}")
