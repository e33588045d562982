import numpy as np
import pytest

from gbtemu.align import (
    AlignerState,
    Event,
    FrameAligner,
    Phase,
    aligner_step,
    right_shift,
)

STD = np.array([1, 0, 1, 0], dtype=np.uint8)


def clean_stream(n_frames, junk=0, seed=0):
    rng = np.random.default_rng(seed)
    frames = rng.integers(0, 2, size=(n_frames, 120), dtype=np.uint8)
    frames[:, :4] = STD
    # keep the body free of header patterns at every 4-bit alignment we might
    # land on: not needed for correctness, only makes the hand trace exact
    return np.concatenate([np.zeros(junk, dtype=np.uint8), frames.reshape(-1)])


def header_free_stream(n_frames, junk):
    # body bits all ones: no window at a wrong offset can start with 1010/0101
    frames = np.ones((n_frames, 120), dtype=np.uint8)
    frames[:, :4] = STD
    return np.concatenate([np.ones(junk, dtype=np.uint8), frames.reshape(-1)])


def run(stream):
    al = FrameAligner()
    return al, al.feed(stream)


def test_right_shift():
    s = np.arange(300) % 2
    assert np.array_equal(right_shift(s, 0), s)
    assert right_shift(s, 119).size == 300 - 119
    with pytest.raises(ValueError):
        right_shift(s, 120)
    with pytest.raises(ValueError):
        right_shift(s, -1)
    framed = clean_stream(3, junk=7)
    assert np.array_equal(right_shift(framed, 7)[:4], STD)


def hand_trace(junk, n_frames):
    # one slip per frame until offset == junk, then 1 + 32 headers, then InLock
    lines = [f"{k} Slipped {k + 1} 0 0" for k in range(junk)]
    k = junk
    lines.append(f"{k} HeaderSeen {junk} 0 0")
    for g in range(1, 32):
        lines.append(f"{k + g} HeaderSeen {junk} {g} 0")
    lines.append(f"{k + 32} LockAcquired {junk} 32 0")
    for f in range(k + 33, n_frames):
        lines.append(f"{f} InLock {junk} 32 0")
    return lines


@pytest.mark.parametrize("junk", [0, 1, 7, 64, 119])
def test_golden_trace_on_header_free_body(junk):
    n = junk + 40
    al, windows = run(header_free_stream(n, junk))
    # the final frame index needs a full window, which only fits up to n - 1
    assert [w.log_line() for w in windows] == hand_trace(junk, windows[-1].frame_idx + 1)


@pytest.mark.parametrize("junk", range(0, 120, 1))
def test_lock_at_junk_offset(junk):
    al, windows = run(clean_stream(junk + 200, junk, seed=junk))
    events = [w.event for w in windows]
    i = events.index(Event.LOCK_ACQUIRED)
    assert windows[i].state.bit_offset == junk
    # exactly 32 further headers after the first one at the locking offset
    assert events[i - 32:i] == [Event.HEADER_SEEN] * 32
    assert windows[i - 32].state.good_count == 0
    assert events.count(Event.SLIPPED) <= 120
    assert all(e is Event.IN_LOCK for e in events[i + 1:])


def test_noise_never_locks():
    rng = np.random.default_rng(1234)
    noise = rng.integers(0, 2, 120 * 10**4, dtype=np.uint8)
    _, windows = run(noise)
    assert len(windows) >= 10**4 - 1
    assert all(w.state.phase is not Phase.LOCKED for w in windows)


def locked_state():
    return AlignerState(phase=Phase.LOCKED, good_count=32)


def test_three_misses_then_header_stays_locked():
    bad = np.zeros(120, dtype=np.uint8)
    good = np.concatenate([STD, np.zeros(116, dtype=np.uint8)])
    s = locked_state()
    for i in range(3):
        s, e = aligner_step(s, bad)
        assert e is Event.HEADER_MISS and s.bad_count == i + 1
    s, e = aligner_step(s, good)
    assert e is Event.IN_LOCK and s.phase is Phase.LOCKED and s.bad_count == 0


def test_four_misses_lose_lock():
    bad = np.zeros(120, dtype=np.uint8)
    s = locked_state()
    events = []
    for _ in range(4):
        s, e = aligner_step(s, bad)
        events.append(e)
    assert events[-1] is Event.LOCK_LOST and s.phase is Phase.SEARCHING


def test_confirm_miss_restarts_with_slip():
    s = AlignerState(phase=Phase.CONFIRMING, bit_offset=5, good_count=10)
    s, e = aligner_step(s, np.zeros(120, dtype=np.uint8))
    assert e is Event.SLIPPED and s.phase is Phase.SEARCHING
    assert s.bit_offset == 6 and s.good_count == 0


def test_both_header_patterns_accepted():
    s, e = aligner_step(AlignerState(), np.array([0, 1, 0, 1] + [0] * 116, dtype=np.uint8))
    assert e is Event.HEADER_SEEN


def test_slip_wraps_at_frame_length():
    s, e = aligner_step(AlignerState(bit_offset=119), np.zeros(120, dtype=np.uint8))
    assert s.bit_offset == 0


def test_chunked_feed_is_deterministic():
    stream = clean_stream(300, junk=33, seed=2)
    _, whole = run(stream)
    al = FrameAligner()
    parts = []
    rng = np.random.default_rng(0)
    pos = 0
    while pos < stream.size:
        n = int(rng.integers(1, 500))
        parts.extend(al.feed(stream[pos:pos + n]))
        pos += n
    assert [w.log_line() for w in parts] == [w.log_line() for w in whole]
    assert [w.start for w in parts] == [w.start for w in whole]
