import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jccontrol.errors import ValidationError
from jccontrol.pulses import (PulseSpec, check_step_alignment, realize,
                              sample_pulse, stage_values)


def test_spec_validation():
    with pytest.raises(ValidationError):
        PulseSpec(kind="square", amplitude=1.0)  # missing tau_c
    with pytest.raises(ValidationError):
        PulseSpec(kind="sine_squared", amplitude=1.0)  # missing omega_p
    with pytest.raises(ValidationError):
        PulseSpec(kind="square", amplitude=1.0, tau_c=0.1, jitter_fraction=1.0)
    with pytest.raises(ValidationError):
        PulseSpec(kind="sawtooth", amplitude=1.0)


def test_ideal_square_values():
    spec = PulseSpec(kind="square", amplitude=100.0, tau_c=0.1)
    real = realize(spec, 1.0)
    assert sample_pulse(spec, 0.03, real) == 0.0
    assert sample_pulse(spec, 0.07, real) == 100.0
    # right-continuity at the rising edge
    assert sample_pulse(spec, 0.05, real) == 100.0


def test_ideal_sine_squared_peak():
    spec = PulseSpec(kind="sine_squared", amplitude=100.0, omega_p=10 * np.pi)
    real = realize(spec, 1.0)
    assert sample_pulse(spec, 0.05, real) == pytest.approx(100.0, abs=1e-9)
    assert sample_pulse(spec, 0.0, real) == pytest.approx(0.0, abs=1e-12)


def test_ideal_periodicity():
    sq = realize(PulseSpec(kind="square", amplitude=3.0, tau_c=0.1), 2.0)
    s2 = realize(PulseSpec(kind="sine_squared", amplitude=3.0, omega_p=10 * np.pi), 2.0)
    ts = np.linspace(0.011, 0.89, 57)
    np.testing.assert_allclose(sq.value(ts + 0.1), sq.value(ts), atol=1e-12)
    np.testing.assert_allclose(s2.value(ts + 0.1), s2.value(ts), atol=3e-12)


def test_alignment_check():
    check_step_alignment(PulseSpec(kind="square", amplitude=1.0, tau_c=0.1), 1e-4)
    with pytest.raises(ValidationError):
        check_step_alignment(PulseSpec(kind="square", amplitude=1.0, tau_c=0.1), 3e-4)
    # smooth pulses have no alignment constraint
    check_step_alignment(PulseSpec(kind="sine_squared", amplitude=1.0, omega_p=10 * np.pi), 3e-4)


def test_jittered_square_edges_quantized():
    spec = PulseSpec(kind="square", amplitude=100.0, tau_c=0.1, jitter_fraction=0.05)
    dt = 1e-4
    real = realize(spec, 2.0, seed=5, run_index=3, edge_grid=dt)
    on_grid = np.abs(real.edges / dt - np.round(real.edges / dt))
    assert np.max(on_grid) < 1e-9
    assert np.all(np.diff(real.edges) > 0)
    # shifts stay within 5% of the half-period
    nominal = np.empty_like(real.edges)
    nominal[0::2] = (np.arange(len(real.edges) // 2) + 0.5) * 0.1
    nominal[1::2] = (np.arange(len(real.edges) // 2) + 1.0) * 0.1
    assert np.max(np.abs(real.edges - nominal)) <= 0.05 * 0.05 + dt / 2


def test_realization_deterministic():
    spec = PulseSpec(kind="square", amplitude=100.0, tau_c=0.1, jitter_fraction=0.05, seed=9)
    a = realize(spec, 1.0, run_index=2, edge_grid=1e-4)
    b = realize(spec, 1.0, run_index=2, edge_grid=1e-4)
    c = realize(spec, 1.0, run_index=3, edge_grid=1e-4)
    np.testing.assert_array_equal(a.edges, b.edges)
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.array_equal(a.edges, c.edges)


def test_stage_values_square_constant_per_step():
    spec = PulseSpec(kind="square", amplitude=2.0, tau_c=0.1)
    real = realize(spec, 0.2)
    cst = stage_values(real, 2000, 1e-4)
    assert np.all(cst[:, 0] == cst[:, 1]) and np.all(cst[:, 1] == cst[:, 2])
    # first half of each period off, second half on
    assert cst[0, 0] == 0.0
    assert cst[600, 0] == 2.0


def test_stage_values_smooth_uses_stage_times():
    spec = PulseSpec(kind="sine_squared", amplitude=1.0, omega_p=10 * np.pi)
    real = realize(spec, 0.2)
    dt = 1e-3
    cst = stage_values(real, 100, dt)
    t0 = 7 * dt
    assert cst[7, 0] == pytest.approx(np.sin(10 * np.pi * t0) ** 2)
    assert cst[7, 1] == pytest.approx(np.sin(10 * np.pi * (t0 + dt / 2)) ** 2)
    assert cst[7, 2] == pytest.approx(np.sin(10 * np.pi * (t0 + dt)) ** 2)


@settings(deadline=None, max_examples=30)
@given(st.integers(0, 2**31 - 1), st.sampled_from(["square", "sine_squared"]))
def test_jittered_amplitude_bound(seed, kind):
    amp = 100.0
    if kind == "square":
        spec = PulseSpec(kind=kind, amplitude=amp, tau_c=0.1, jitter_fraction=0.05)
    else:
        spec = PulseSpec(kind=kind, amplitude=amp, omega_p=10 * np.pi, jitter_fraction=0.05)
    real = realize(spec, 3.0, seed=seed, edge_grid=1e-4 if kind == "square" else None)
    ts = np.linspace(0, 3.0, 4001)
    assert np.max(np.abs(real.value(ts))) <= 1.05 * amp + 1e-12
