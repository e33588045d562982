"""
Finding the frame boundary
==========================

The receiver sees an unframed bitstream.  It slides a 120-bit window one bit
at a time until a header shows up, then wants 32 more headers in a row
before declaring lock.
"""
from gbtemu.pipeline import LinkConfig, simulate_link

junk = 5
run = simulate_link(LinkConfig(junk_bits=junk), 60, keep_log=True)

print("frame event offset good bad")
for line in run.log[:junk + 2] + ["..."] + run.log[junk + 30:junk + 35]:
    print(line)

st = run.stats
print()
print(f"{junk} junk bits in front: locked after {st.lock_frames} frames, "
      f"{st.frames_received} frames delivered, post-FEC errors {st.post_fec_bit_errors}")
