import io
import socket
import struct
import threading

import numpy as np
import pytest

from gbtemu.channel import ChannelModel
from gbtemu.crypt import AesKey
from gbtemu.frame import Mode
from gbtemu.linkio import (
    MAGIC,
    ProtocolError,
    ProxyEndpoint,
    SessionHeader,
    TxEndpoint,
    load_key_file,
    proxy_session,
    read_session,
    run_rx,
    write_session,
)
from gbtemu.pipeline import Crypto, LinkConfig, PayloadSource, run_link, simulate_link

LOCAL = ("127.0.0.1", 0)


def roundtrip_file(cfg, n, local=None):
    buf = io.BytesIO()
    write_session(buf, cfg, n)
    buf.seek(0)
    return read_session(buf, local or cfg)


def through_proxy(cfg, n, model, junk=0):
    buf = io.BytesIO()
    write_session(buf, cfg, n)
    buf.seek(0)
    out = io.BytesIO()
    proxy_session(buf, out, model, junk)
    out.seek(0)
    return out


@pytest.mark.parametrize("crypto", list(Crypto))
@pytest.mark.parametrize("mode", list(Mode))
def test_header_roundtrip(mode, crypto):
    cfg = LinkConfig(mode=mode, crypto=crypto, interleave_on=False, payload_seed=2**40 + 3,
                     scramble_seeds=(1, 2, 3, 0x1FFF))
    raw = SessionHeader.for_config(cfg).to_bytes()
    assert raw[:4] == MAGIC
    hdr, raw2 = SessionHeader.read(io.BytesIO(raw + b"trailing"))
    assert raw2 == raw
    back = hdr.apply_to(LinkConfig())
    for field in ("mode", "crypto", "interleave_on", "nonce", "scramble_seeds", "payload_seed"):
        assert getattr(back, field) == getattr(cfg, field)
    if crypto is Crypto.RSA:
        assert hdr.session_key(cfg).key_bytes == cfg.aes_key.key_bytes


def test_bad_magic_rejected():
    raw = bytearray(SessionHeader.for_config(LinkConfig()).to_bytes())
    raw[:4] = b"XXXX"
    with pytest.raises(ProtocolError, match="magic"):
        read_session(io.BytesIO(bytes(raw)))


def test_truncated_stream_rejected():
    buf = io.BytesIO()
    write_session(buf, LinkConfig(), 50)
    with pytest.raises(ProtocolError):
        read_session(io.BytesIO(buf.getvalue()[:-20]))


def test_data_layout():
    buf = io.BytesIO()
    write_session(buf, LinkConfig(), 10)
    raw = buf.getvalue()
    hlen = len(SessionHeader.for_config(LinkConfig()).to_bytes())
    (n,) = struct.unpack(">I", raw[hlen:hlen + 4])
    assert n == 150
    assert raw[hlen + 4] >> 4 == 0b1010
    assert raw[-12:] == struct.pack(">IQ", 0, 10)


@pytest.mark.parametrize("crypto", list(Crypto))
def test_file_session_matches_simulation(crypto):
    cfg = LinkConfig(crypto=crypto)
    stats, rx = roundtrip_file(cfg, 300)
    assert stats == run_link(cfg, 300)
    assert stats.post_fec_bit_errors == 0
    sent = PayloadSource(cfg.payload_seed).take(300)
    got = np.concatenate(rx.received_payloads)
    assert np.array_equal(got, sent[300 - len(got):])


def test_wrong_aes_key_garbles():
    cfg = LinkConfig(crypto=Crypto.AES)
    stats, _ = roundtrip_file(cfg, 200, cfg.replace(aes_key=AesKey(bytes(16))))
    assert stats.post_ber > 0.3


@pytest.mark.parametrize("junk", [0, 3, 64, 119])
def test_proxy_equals_simulation(junk):
    model = ChannelModel.bsc(0.004, seed=11)
    cfg = LinkConfig(crypto=Crypto.AES)
    stats, _ = read_session(through_proxy(cfg, 1500, model, junk), cfg)
    assert stats == run_link(cfg.replace(channel=model, junk_bits=junk), 1500)


def test_proxy_passes_header_untouched():
    cfg = LinkConfig(crypto=Crypto.RSA)
    out = through_proxy(cfg, 20, ChannelModel.bsc(0.5, seed=1))
    raw = SessionHeader.for_config(cfg).to_bytes()
    assert out.getvalue()[:len(raw)] == raw


def test_key_file(tmp_path):
    path = tmp_path / "keys.txt"
    path.write_text("# demo\naes_key = 000102030405060708090a0b0c0d0e0f\nnonce=ff\n"
                    "rsa_p = 3d\nrsa_q = 35\nrsa_e = 11\n")
    cfg = load_key_file(path)
    assert cfg.aes_key.key_bytes == bytes(range(16)) and cfg.nonce == 255
    assert (cfg.rsa.n, cfg.rsa.d) == (3233, 2753)
    path.write_text("colour = red\n")
    with pytest.raises(ValueError):
        load_key_file(path)


def serve_in_thread(endpoint):
    result = {}
    t = threading.Thread(target=lambda: result.setdefault("value", endpoint.serve()), daemon=True)
    t.start()
    return t, result


def test_network_loopback_equals_simulation():
    model = ChannelModel.bsc(0.001, seed=7)
    cfg = LinkConfig(crypto=Crypto.RSA)
    tx = TxEndpoint(LOCAL, cfg, n_frames=2000)
    proxy = ProxyEndpoint(LOCAL, tx.address, model, junk_bits=45)
    threads = [serve_in_thread(tx), serve_in_thread(proxy)]
    stats, _ = run_rx(proxy.address, LinkConfig())
    for t, _ in threads:
        t.join(10)
    assert threads[0][1]["value"] == 2000
    assert stats == run_link(cfg.replace(channel=model, junk_bits=45), 2000)


def test_network_rx_rejects_bad_magic():
    srv = socket.create_server(LOCAL)
    addr = srv.getsockname()[:2]

    def bogus():
        conn, _ = srv.accept()
        conn.sendall(b"NOPE" + bytes(40))
        conn.close()
        srv.close()

    t = threading.Thread(target=bogus, daemon=True)
    t.start()
    with pytest.raises(ProtocolError):
        run_rx(addr)
    t.join(5)


def test_explicit_payloads_are_not_scored():
    cfg = LinkConfig()
    payloads = np.ones((100, 52), dtype=np.uint8)
    buf = io.BytesIO()
    write_session(buf, cfg, 100, payloads=payloads)
    buf.seek(0)
    stats, rx = read_session(buf, cfg)
    assert stats.frames_sent == 100
    assert np.all(np.concatenate(rx.received_payloads) == 1)
    assert simulate_link(cfg, 10).stats.frames_sent == 10
