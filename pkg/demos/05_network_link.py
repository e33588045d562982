"""
Two boards and a fibre, over localhost
======================================

A transmitter endpoint, an error-injecting proxy standing in for the fibre,
and a receiver.  The result is identical to the in-process simulation with
the same channel seed.
"""
import threading

from gbtemu.bench import throughput_report, timed_run
from gbtemu.channel import ChannelModel
from gbtemu.linkio import ProxyEndpoint, TxEndpoint, run_rx
from gbtemu.pipeline import Crypto, LinkConfig, run_link

cfg = LinkConfig(crypto=Crypto.RSA)
fibre = ChannelModel.bsc(0.001, seed=42)

tx = TxEndpoint(("127.0.0.1", 0), cfg, n_frames=5000)
proxy = ProxyEndpoint(("127.0.0.1", 0), tx.address, fibre, junk_bits=19)
for ep in (tx, proxy):
    threading.Thread(target=ep.serve, daemon=True).start()

# the receiver only knows its RSA private key; everything else is in the session header
stats, _ = run_rx(proxy.address, LinkConfig())
print(f"received {stats.frames_received} of {stats.frames_sent} frames, lock after {stats.lock_frames}")
print(f"pre-FEC BER {stats.pre_ber:.2e}, post-FEC BER {stats.post_ber:.2e}")
print("same as in-process run:", stats == run_link(cfg.replace(channel=fibre, junk_bits=19), 5000))

print()
for line in throughput_report(timed_run(cfg, 5000)).lines():
    print(line)
