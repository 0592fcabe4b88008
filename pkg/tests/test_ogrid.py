import numpy as np
import pytest

from jccontrol import leo, ogrid
from jccontrol.errors import ValidationError
from jccontrol.model import JCParams
from jccontrol.pulses import PulseSpec

SQUARE = PulseSpec(kind="square", amplitude=100.0, tau_c=0.1)


def test_grid_zero_coupling_is_zero(leo_params):
    p0 = JCParams(omega=1, omega_c=1, kappa=0.7, lam=0.0, gamma=0.4)
    sol = ogrid.solve_o_operator_grid(p0, None, 1.0, 100)
    assert np.max(np.abs(sol.F1)) == 0
    assert np.max(np.abs(sol.F2)) == 0


def test_grid_short_time_source_term(leo_params):
    sol = ogrid.solve_o_operator_grid(leo_params, None, 0.02, 20)
    expect = leo_params.lam * leo_params.gamma * sol.times / 2
    np.testing.assert_allclose(sol.F2.real, expect, rtol=3e-2, atol=1e-6)


def test_column_boundary_values_exact(leo_params):
    sol = ogrid.solve_o_operator_grid(leo_params, None, 1.0, 50)
    # the youngest column was born at t = horizon with its boundary values
    assert sol.f1_cols[-1] == 0.0
    assert sol.f2_cols[-1] == leo_params.lam


def test_grid_agrees_with_closed_ode_uncontrolled(leo_params):
    ref = ogrid.refine_o_operator_grid(leo_params, None, 2.0, dt_s=1e-3)
    _, f1c, f2c = leo.solve_o_closed(leo_params, None, 2.0, dt=1e-4, stride=10)
    assert ref.converged
    assert np.max(np.abs(ref.F1 - f1c)) < 1e-6
    assert np.max(np.abs(ref.F2 - f2c)) < 1e-6


def test_grid_agrees_with_closed_ode_controlled_short(leo_params):
    ref = ogrid.refine_o_operator_grid(leo_params, SQUARE, 2.0, dt_s=1e-3)
    _, f1c, f2c = leo.solve_o_closed(leo_params, SQUARE, 2.0, dt=1e-4, stride=10)
    assert ref.converged
    assert np.max(np.abs(ref.F1 - f1c)) < 1e-6
    assert np.max(np.abs(ref.F2 - f2c)) < 1e-6


def test_grid_rejects_off_grid_edges(leo_params):
    # 3 columns over T=1 puts the 0.05 edge between nodes
    with pytest.raises(ValidationError):
        ogrid.solve_o_operator_grid(leo_params, SQUARE, 1.0, 3)


def test_grid_rejects_jittered_spec(leo_params):
    spec = PulseSpec(kind="square", amplitude=1.0, tau_c=0.1, jitter_fraction=0.05)
    with pytest.raises(ValidationError):
        ogrid.solve_o_operator_grid(leo_params, spec, 1.0, 100)
