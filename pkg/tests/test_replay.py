from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from erc.replay import ReplayBuffer, Transition, replay_schedule


def tr(i, log_b=0.0):
    return Transition(np.array([float(i)]), np.array([0.0]), np.array([float(i) + 1]), float(i), False, log_b)


def contents(buf):
    return [t.r for t in buf]


def test_fifo_eviction():
    buf = ReplayBuffer(1, 1, capacity=3)
    for i in (1, 2, 3, 4):
        buf.push(tr(i))
    assert contents(buf) == [2.0, 3.0, 4.0]


def test_count_below_capacity():
    buf = ReplayBuffer(1, 1, capacity=10)
    for i in range(7):
        buf.push(tr(i))
    assert len(buf) == 7


def test_rejects_non_finite():
    buf = ReplayBuffer(1, 1, capacity=3)
    with pytest.raises(ValueError):
        buf.push(tr(1, log_b=float("nan")))
    assert len(buf) == 0


def test_matches_reference_queue_long_run():
    rng = np.random.default_rng(0)
    cap = 37
    buf = ReplayBuffer(1, 1, capacity=cap)
    ref = deque(maxlen=cap)
    for _ in range(10_000):
        x = float(rng.normal())
        buf.push(tr(x))
        ref.append(x)
    assert contents(buf) == list(ref)


@settings(max_examples=50, deadline=None)
@given(cap=st.integers(1, 20), xs=st.lists(st.integers(-1000, 1000), max_size=80))
def test_retains_last_pushes(cap, xs):
    buf = ReplayBuffer(1, 1, capacity=cap)
    for x in xs:
        buf.push(tr(x))
    assert contents(buf) == [float(x) for x in xs[-cap:]] if xs else contents(buf) == []
    assert len(buf) == min(len(xs), cap)


def test_sample_single_item():
    buf = ReplayBuffer(1, 1, capacity=5)
    buf.push(tr(42))
    b = buf.sample_uniform(8, np.random.default_rng(0))
    assert np.all(b.r == 42.0) and len(b) == 8


def test_sample_empty_rejected():
    with pytest.raises(ValueError):
        ReplayBuffer(1, 1, 4).sample_uniform(2, np.random.default_rng(0))


def test_sample_deterministic():
    buf = ReplayBuffer(1, 1, capacity=50)
    for i in range(50):
        buf.push(tr(i))
    a = buf.sample_uniform(16, np.random.default_rng(3))
    b = buf.sample_uniform(16, np.random.default_rng(3))
    assert np.array_equal(a.r, b.r)


def test_sample_uniform_chi_square():
    buf = ReplayBuffer(1, 1, capacity=100)
    # wrap the ring so physical and logical order differ
    for i in range(130):
        buf.push(tr(i))
    b = buf.sample_uniform(1_000_000, np.random.default_rng(11))
    counts = np.bincount(b.r.astype(int) - 30, minlength=100)
    assert counts.size == 100
    _, p = stats.chisquare(counts)
    assert p > 0.001


@pytest.mark.parametrize("count,expected", [(102400, 200), (100, 0), (512, 1), (0, 0), (256, 1)])
def test_replay_schedule(count, expected):
    assert replay_schedule(count) == expected


@given(st.integers(512, 10**6))
def test_replay_schedule_covers_half(count):
    n = replay_schedule(count)
    assert abs(n * 256 - count / 2) <= 128
    assert n * 256 <= count
