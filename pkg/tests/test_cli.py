import subprocess
import sys

import pytest

from gbtemu.channel import ChannelModel
from gbtemu.cli import main
from gbtemu.interleave import build_map
from gbtemu.pipeline import Crypto, LinkConfig, run_link


def run(capsys, *argv):
    rc = main(list(argv))
    return rc, capsys.readouterr().out


def stats_of(out):
    return dict(line.split("=", 1) for line in out.splitlines() if "=" in line)


def test_roundtrip_prints_payload_match(capsys):
    rc, out = run(capsys, "roundtrip", "--mode", "nofec", "--crypto", "aes")
    assert rc == 0 and out.splitlines()[-1] == "payload match"


def test_roundtrip_reports_mismatch(capsys):
    rc, out = run(capsys, "roundtrip", "--mode", "nofec", "--p", "0.01", "--frames", "500")
    assert rc == 1 and "payload mismatch" in out


def test_roundtrip_stats_match_library(capsys):
    rc, out = run(capsys, "roundtrip", "--crypto", "rsa", "--p", "0.004", "--seed", "3", "--frames", "800",
                  "--prepend-junk-bits", "9")
    expected = run_link(LinkConfig(crypto=Crypto.RSA, channel=ChannelModel.bsc(0.004, 3), junk_bits=9), 800)
    assert int(stats_of(out)["post_fec_bit_errors"]) == expected.post_fec_bit_errors
    assert int(stats_of(out)["lock_frames"]) == expected.lock_frames


def test_sweep_default_grid_has_21_rows(capsys):
    rc, out = run(capsys, "sweep", "--frames", "60", "--mode", "standard", "--model", "awgn")
    lines = out.splitlines()
    assert rc == 0 and lines[0] == "ebn0_db,p,mode,crypto,frames,pre_ber,post_ber,fer,lock_frames"
    assert len(lines) == 22
    assert [ln.split(",")[0] for ln in lines[1:4]] == ["0", "0.5", "1"]


def test_sweep_p_axis(capsys):
    rc, out = run(capsys, "sweep", "--model", "burst", "--p", "0,0.01", "--frames", "100", "--interleave", "both")
    lines = out.splitlines()
    assert lines[0].endswith(",interleave") and len(lines) == 5
    assert lines[1].split(",")[0] == ""


def test_sweep_rejects_awgn_on_p_axis(capsys):
    assert main(["sweep", "--p", "0.1", "--frames", "10"]) == 2


def test_dump_map(capsys):
    rc, out = run(capsys, "dump-map")
    assert out == build_map().dump()
    assert out.splitlines()[15] == "15 4"


def test_vectors_are_deterministic_and_pinned(capsys):
    _, a = run(capsys, "vectors")
    _, b = run(capsys, "vectors")
    assert a == b
    assert "standard il=1 off a5a51c7c581517e45b6d718a0e9e10" in a
    assert "000102030405060708090a0b0c0d0e0f 00112233445566778899aabbccddeeff 69c4e0d86a7b0430d8cdb78070b4c55a" in a
    assert "0000001 000000111010001" in a


def test_encode_decode_file(tmp_path, capsys):
    src = tmp_path / "msg.bin"
    src.write_bytes(b"optical link test message\n" * 20)
    session, back = tmp_path / "s.gbte", tmp_path / "out.bin"
    assert main(["encode", "--crypto", "aes", "--input", str(src), "-o", str(session)]) == 0
    rc, out = run(capsys, "decode", "--crypto", "aes", str(session), "-o", str(back))
    assert rc == 0
    data = back.read_bytes()
    assert data[:len(src.read_bytes())] == src.read_bytes()
    assert not any(data[len(src.read_bytes()):])


def test_decode_seeded_session_scores_ber(tmp_path, capsys):
    session = tmp_path / "s.gbte"
    main(["encode", "--frames", "300", "--mode", "nofec", "-o", str(session)])
    capsys.readouterr()
    _, out = run(capsys, "decode", str(session))
    st = stats_of(out)
    assert st["frames_sent"] == "300" and st["post_ber"] == "0"


def test_decode_rejects_garbage(tmp_path, capsys):
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"\x00" * 64)
    assert main(["decode", str(bad)]) == 2
    assert "magic" in capsys.readouterr().err


def test_key_file_flag(tmp_path, capsys):
    keys = tmp_path / "k.txt"
    keys.write_text("aes_key = ffeeddccbbaa99887766554433221100\n")
    session = tmp_path / "s.gbte"
    main(["encode", "--crypto", "aes", "--key-file", str(keys), "--frames", "200", "-o", str(session)])
    capsys.readouterr()
    _, good = run(capsys, "decode", "--key-file", str(keys), str(session))
    _, bad = run(capsys, "decode", str(session))
    assert stats_of(good)["post_ber"] == "0"
    assert float(stats_of(bad)["post_ber"]) > 0.3


def test_bench_labels(capsys):
    rc, out = run(capsys, "bench", "--frames", "500")
    assert out.startswith("measured (software)") and "model (link timing): line rate 4.8 Gbit/s" in out


def spawn(*argv):
    proc = subprocess.Popen([sys.executable, "-m", "gbtemu", *argv], stderr=subprocess.PIPE, text=True)
    line = proc.stderr.readline()
    return proc, line.split()[-1]


def test_tx_proxy_rx_processes(capsys):
    tx, tx_addr = spawn("tx", "--bind", "127.0.0.1:0", "--frames", "1500", "--crypto", "rsa")
    proxy, px_addr = spawn("proxy", "--listen", "127.0.0.1:0", "--upstream", tx_addr,
                           "--p", "0.002", "--seed", "5", "--prepend-junk-bits", "77")
    try:
        rc, out = run(capsys, "rx", "--connect", px_addr)
    finally:
        assert tx.wait(20) == 0 and proxy.wait(20) == 0
    expected = run_link(LinkConfig(crypto=Crypto.RSA, channel=ChannelModel.bsc(0.002, 5), junk_bits=77), 1500)
    st = stats_of(out)
    assert rc == 0
    for name in ("frames_sent", "frames_received", "pre_fec_bit_errors", "post_fec_bit_errors", "lock_frames"):
        assert int(st[name]) == getattr(expected, name)


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code != 0

