from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdlprobe.errors import ScheduleError
from mdlprobe.schedule import make_schedule


def test_power_of_two_schedule():
    s = make_schedule(16384)
    assert s.cuts == (0, 64, 128, 256, 512, 1024, 2048, 4096, 8192, 16384)
    assert s.num_blocks == 9 and not s.fallback


def test_rounded_cuts_hand_computed():
    # r = (1000/64) ** (1/8); cuts are floor(64 * r**k + 0.5)
    r = (1000 / 64) ** (1 / 8)
    want = [0] + [math.floor(64 * r ** k + 0.5) for k in range(8)] + [1000]
    assert list(make_schedule(1000).cuts) == want


def test_fallback_for_small_n():
    with pytest.warns(UserWarning):
        s = make_schedule(100)
    assert s.cuts == (0, 50, 100) and s.fallback


@pytest.mark.parametrize("n,S,t1", [(64, 9, 64), (50, 9, 64), (5, 9, 1), (100, 1, 10), (100, 9, 0)])
def test_invalid_schedules(n, S, t1):
    with pytest.raises(ScheduleError):
        make_schedule(n, S, t1)


def test_unit_blocks():
    s = make_schedule(256, 247, 10)
    assert s.cuts == tuple([0] + list(range(10, 257)))
    assert set(s.sizes()[1:]) == {1}


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 12), st.integers(1, 200), st.integers(0, 50000))
def test_schedule_invariants(S, t1, extra):
    n = max(2 * t1, S + t1) + extra
    s = make_schedule(n, S, t1)
    cuts = list(s.cuts)
    assert cuts[0] == 0 and cuts[-1] == n and cuts[1] == t1
    assert all(a < b for a, b in zip(cuts, cuts[1:]))
    assert sum(s.sizes()) == n and s.num_blocks == S
