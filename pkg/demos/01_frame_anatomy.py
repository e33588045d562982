"""
Anatomy of one frame
====================

Follow a single 52-bit payload through the transmitter, one stage at a time.
"""
import numpy as np

from gbtemu.crypt import DEMO_AES_KEY, DEMO_NONCE, keystream_bits
from gbtemu.frame import HEADERS, Mode, frames_to_bytes
from gbtemu.gf16bch import encode_many
from gbtemu.interleave import interleave
from gbtemu.scramble import LaneBank, scramble_payload


def show(label, bits):
    print(f"{label:<12}", "".join(map(str, bits)))


# 4 service bits and 48 data bits
sc = np.array([1, 0, 1, 1], dtype=np.uint8)
data = np.resize(np.array([1, 0, 0, 0, 1], dtype=np.uint8), 48)
payload = np.concatenate([sc, data])
show("payload", payload)

# four independent scrambler lanes, 13 bits each
scrambled = scramble_payload(LaneBank(), payload)
show("scrambled", scrambled)

# the header rides in front and is coded with the payload: 56 bits = 8 messages of 7
body = np.concatenate([HEADERS[Mode.STANDARD], scrambled]).reshape(8, 7)
coded = encode_many(body).reshape(-1)
show("coded", coded)

# interleaving spreads each codeword across the frame; the header stays in front
frame = interleave(coded)
show("interleaved", frame)

# optional masking: AES keystream XOR over everything but the header
masked = frame.copy()
masked[4:] ^= keystream_bits(DEMO_AES_KEY, DEMO_NONCE, 0)
show("masked", masked)

print()
print("wire bytes (clear): ", frames_to_bytes(frame).hex())
print("wire bytes (masked):", frames_to_bytes(masked).hex())
