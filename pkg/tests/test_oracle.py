import pytest
from hypothesis import given
from hypothesis import strategies as st

from spikegate.oracle import (
    StimulusSet,
    oracle_and,
    oracle_css,
    oracle_flank,
    oracle_latch,
    oracle_not,
    oracle_or,
    oracle_oscillator,
    oracle_switch,
    oracle_xor,
)

H = 20


def S(*trains, horizon=H):
    return StimulusSet.of(trains, horizon)


def test_stimulus_set_bounds():
    with pytest.raises(ValueError):
        S([20])
    with pytest.raises(ValueError):
        S([3, 2])
    assert S([1, 2], [2]).counts()[:4] == [0, 1, 2, 0]


def test_or():
    assert oracle_or(S([2])).ticks == (3,)
    assert oracle_or(S([2], [2])).ticks == (3,)
    assert oracle_or(S([], [])).ticks == ()
    assert oracle_or(S([19])).ticks == ()


def test_and():
    four = S([3], [3], [3], [3])
    assert oracle_and(four, 4, 2).ticks == (5,)
    assert oracle_and(S([3], [3], [3], []), 4, 2).ticks == ()
    assert oracle_and(four, 4, 1).ticks == (4,)
    with pytest.raises(ValueError):
        oracle_and(four, 3, 2)
    with pytest.raises(ValueError):
        oracle_and(four, 4, 3)


def test_xor():
    assert oracle_xor(S([4], []), 2).ticks == (6,)
    assert oracle_xor(S([4], [4]), 2).ticks == ()
    every = list(range(H))
    second = list(range(0, H, 2))
    got = oracle_xor(S(every, second), 2).ticks
    assert got == tuple(t + 2 for t in range(1, H, 2) if t + 2 < H)


def test_not():
    assert oracle_not([], 1, 6).ticks == (2, 3, 4, 5)
    assert 7 not in oracle_not([6], 1, H).ticks
    assert 8 in oracle_not([6], 1, H).ticks
    assert oracle_not(range(2, H), 1, H).ticks == (2,)


def test_latch():
    assert oracle_latch([4], [], 10).ticks == (5, 6, 7, 8, 9)
    assert oracle_latch([4], [9], H).ticks == (5, 6, 7, 8, 9)
    assert oracle_latch([4], [4], H).ticks == ()
    # re-set while held keeps it held
    assert oracle_latch([2, 4], [6], 10).ticks == (3, 4, 5, 6)


def test_switch():
    u, c = oracle_switch([1], 8)
    assert u.ticks == (2,) and c.ticks == (3, 4, 5, 6, 7)
    u, c = oracle_switch([1, 6, 7, 8], 12)
    assert u.ticks == (2, 8)
    assert c.ticks == (3, 4, 5, 6)
    u, c = oracle_switch([2, 6], 14)
    assert u.ticks == (3,) and c.ticks == (4, 5, 6)


def test_css():
    assert oracle_css(1, 5).ticks == (1, 2, 3, 4)
    assert oracle_css(0, 1).ticks == (0,)
    with pytest.raises(ValueError):
        oracle_css(3, 3)


def test_oscillator():
    got = oracle_oscillator(4, 1, 22).ticks
    assert got == (2, 3, 4, 5, 10, 11, 12, 13, 18, 19, 20, 21)
    assert oracle_oscillator(1, 0, 8).ticks == (1, 3, 5, 7)
    with pytest.raises(ValueError):
        oracle_oscillator(0, 1, 8)


def test_flank():
    rise, fall = oracle_flank([6, 7, 8, 9], H)
    assert rise.ticks == (8,) and fall.ticks == (13,)
    rise, fall = oracle_flank(range(3, H), H)
    assert rise.ticks == (5,) and fall.ticks == ()
    rise, fall = oracle_flank([5], H)
    assert rise.ticks == (7,) and fall.ticks == (9,)
    assert oracle_flank([0], H)[0].ticks == (2,)


trains = st.lists(st.integers(0, H - 1), unique=True).map(sorted)


@given(st.lists(trains, min_size=2, max_size=5))
def test_xor_subset_of_or_shifted(ts):
    stims = S(*ts)
    xor = set(oracle_xor(stims, len(ts)).ticks)
    anyone = {t + 1 for t in oracle_or(stims, 1).ticks}
    assert xor <= anyone


@given(trains)
def test_switch_u_and_c_never_together(ts):
    u, c = oracle_switch(ts, H)
    assert not set(u.ticks) & set(c.ticks)


@given(trains)
def test_oracles_pure(ts):
    assert oracle_flank(ts, H) == oracle_flank(ts, H)
    assert oracle_switch(ts, H) == oracle_switch(ts, H)
