import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from memsim.device_models import (
    MemristorParams,
    MemristorState,
    biolek_window,
    linear_drift_state_of_charge,
    memristance,
    state_derivative,
    x0_for_memristance,
)

unit = st.floats(0.0, 1.0)
currents = st.floats(-1.0, 1.0, allow_subnormal=False)


@pytest.mark.parametrize(
    "x, i, p, expected",
    [
        (1.0, 1e-3, 1, 0.0),
        (0.0, -1e-3, 1, 0.0),
        (0.5, 1e-3, 1, 0.75),
        (0.5, 1e-3, 10, 1 - 0.5**20),
    ],
)
def test_window_values(x, i, p, expected):
    assert biolek_window(x, i, p) == pytest.approx(expected, abs=1e-15)


def test_window_zero_current_uses_upper_step():
    # stp(-0) = 1, so x = 1 is free and x = 0 is locked
    assert biolek_window(0.0, 0.0, 1) == 0.0
    assert biolek_window(1.0, 0.0, 1) == 1.0


def test_reversed_window_locks_opposite_boundary():
    assert biolek_window(0.0, 1e-3, 1, "reversed") == 0.0
    assert biolek_window(1.0, 1e-3, 1, "reversed") == 1.0
    assert biolek_window(0.3, -5.0, 3, "none") == 1.0


def test_window_array_matches_scalar():
    x = np.linspace(0, 1, 11)
    i = np.linspace(-1, 1, 11)
    got = biolek_window(x, i, 2)
    want = [biolek_window(float(a), float(b), 2) for a, b in zip(x, i)]
    np.testing.assert_allclose(got, want, rtol=1e-14, atol=1e-15)


@given(unit, currents, st.integers(1, 60))
def test_window_bounded(x, i, p):
    assert 0.0 <= biolek_window(x, i, p) <= 1.0


@given(st.floats(0.01, 0.99), currents)
def test_window_sharpens_with_p(x, i):
    vals = [biolek_window(x, i, p) for p in (1, 2, 5, 10, 50)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))
    assert biolek_window(x, i, 2000) == pytest.approx(1.0, abs=1e-12)


def test_memristance_examples():
    p = MemristorParams()
    assert memristance(p, 1.0) == p.r_on
    assert memristance(p, 0.0) == p.r_off
    assert memristance(p, 0.5) == 8050.0


@given(unit, unit)
def test_memristance_decreasing(a, b):
    p = MemristorParams()
    if b - a > 1e-12:
        assert memristance(p, a) > memristance(p, b)
    elif a <= b:
        assert memristance(p, a) >= memristance(p, b)


def test_state_derivative_examples():
    p = MemristorParams(r_on=100, mu_v=1e-14, d=1e-8, eta=1, p=1)
    assert p.drift_coefficient == pytest.approx(1e4)
    assert state_derivative(p, 0.5, 1e-3) == pytest.approx(7.5, rel=1e-12)
    assert state_derivative(p, 1.0, 1e-3) == 0.0
    assert state_derivative(p, 0.3, 0.0) == 0.0
    assert state_derivative(p.with_(eta=-1), 0.5, 1e-3) == pytest.approx(-7.5, rel=1e-12)


@given(st.floats(1e-9, 1.0))
def test_boundary_lock(i):
    p = MemristorParams()
    assert state_derivative(p, 1.0, i) == 0.0
    assert state_derivative(p, 0.0, -i) == 0.0
    assert state_derivative(p, 0.0, 0.0) == 0.0


def test_linear_drift_examples():
    p = MemristorParams(mu_v=1e-11, window="none")
    assert p.drift_coefficient == pytest.approx(1e7)
    assert linear_drift_state_of_charge(p, 0.0) == (0.5, False)
    x, sat = linear_drift_state_of_charge(p, 2e-8)
    assert x == pytest.approx(0.7, rel=1e-12) and not sat
    assert linear_drift_state_of_charge(p, 1.0) == (1.0, True)
    assert linear_drift_state_of_charge(p, -1.0) == (0.0, True)


def test_linear_drift_matches_integrated_derivative():
    # windowless drift under a smooth current: cumulative trapezoid of dx/dt
    p = MemristorParams(mu_v=1e-11, window="none")
    t = np.linspace(0, 1e-3, 20001)
    i = 2e-5 * np.sin(2 * math.pi * 1e3 * t) + 5e-6
    rate = state_derivative(p, np.full_like(t, 0.5), i)
    x = p.x0 + np.concatenate([[0.0], np.cumsum(0.5 * (rate[1:] + rate[:-1]) * np.diff(t))])
    q = np.concatenate([[0.0], np.cumsum(0.5 * (i[1:] + i[:-1]) * np.diff(t))])
    oracle = linear_drift_state_of_charge(p, q).x
    assert np.sqrt(np.mean((x - oracle) ** 2)) <= 1e-6


@pytest.mark.parametrize(
    "kw",
    [dict(r_on=0.0), dict(r_on=200, r_off=100), dict(d=0), dict(mu_v=-1), dict(eta=0), dict(p=0),
     dict(p=1.5), dict(x0=1.5), dict(window="joglekar")],
)
def test_params_invalid(kw):
    with pytest.raises(ValueError):
        MemristorParams(**kw)


def test_degenerate_params_allowed():
    p = MemristorParams(r_on=500.0, r_off=500.0)
    assert memristance(p, 0.2) == 500.0


def test_state_clamp_and_x0_for_memristance():
    s = MemristorState(1.2)
    s.clamp()
    assert s.x == 1.0
    p = MemristorParams()
    x0 = x0_for_memristance(p, 1e4)
    assert memristance(p, x0) == pytest.approx(1e4, rel=1e-14)
    with pytest.raises(ValueError):
        x0_for_memristance(p, 50.0)
