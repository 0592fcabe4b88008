import numpy as np
import pytest

from jccontrol import leo
from jccontrol.errors import NumericalInstabilityError, ValidationError
from jccontrol.model import JCParams, initial_state_vector, excitation_number
from jccontrol.pulses import PulseSpec, realize

SQUARE = PulseSpec(kind="square", amplitude=100.0, tau_c=0.1)
SINE2 = PulseSpec(kind="sine_squared", amplitude=100.0, omega_p=10 * np.pi)


def lam0(p, **kw):
    return JCParams(omega=p.omega, omega_c=p.omega_c, kappa=p.kappa, lam=0.0,
                    gamma=p.gamma, n_max=p.n_max, **kw)


def test_derivative_boundary_source(leo_params):
    d = leo.o_operator_derivative(0.0, leo.OOperatorState(0, 0), leo_params, c=7.0)
    assert d.f1 == 0
    assert d.f2 == pytest.approx(leo_params.lam * leo_params.gamma / 2)


def test_derivative_closed_system(leo_params):
    p0 = lam0(leo_params)
    d = leo.o_operator_derivative(1.0, leo.OOperatorState(0, 0), p0, c=3.0)
    assert d.f1 == 0 and d.f2 == 0


def test_closed_f_short_time_source(leo_params):
    # leading Taylor term of the source: f2(t) ~ lam gamma t / 2
    ts, f1, f2 = leo.solve_o_closed(leo_params, None, 0.01, dt=1e-5)
    expect = leo_params.lam * leo_params.gamma * ts[-1] / 2
    assert f2[-1].real == pytest.approx(expect, rel=2e-2)
    assert abs(f1[-1]) < 1e-5


def test_closed_f_matches_coupled_propagation(leo_params):
    psi0 = initial_state_vector("plus", 1)
    traj = leo.propagate_leo(psi0, leo_params, SQUARE, 1.0, dt=1e-4, stride=10)
    ts, f1, f2 = leo.solve_o_closed(leo_params, SQUARE, 1.0, dt=1e-4, stride=10)
    np.testing.assert_allclose(traj.f1, f1, atol=1e-12)
    np.testing.assert_allclose(traj.f2, f2, atol=1e-12)


def test_lam0_matches_exact_unitary(leo_params):
    p0 = lam0(leo_params)
    psi0 = initial_state_vector("plus", 1)
    real = realize(SQUARE, 2.0)
    traj = leo.propagate_leo(psi0, p0, real, 2.0, dt=1e-4, stride=100)
    exact = leo.exact_unitary_states(p0, real, traj.times, psi0)
    fid = np.einsum("ti,tij,tj->t", exact.conj(), traj.states, exact).real
    assert np.max(np.abs(fid - 1)) < 1e-9
    # memory integrals identically zero
    assert np.max(np.abs(traj.f1)) == 0
    assert np.max(np.abs(traj.f2)) == 0


def test_dark_state_is_stationary(leo_params):
    g0 = initial_state_vector("g0", 1)
    traj = leo.propagate_leo(g0, leo_params, SQUARE, 1.0, dt=1e-4)
    rho0 = np.outer(g0, g0.conj())
    # populations frozen; only the control phase acts, which is diagonal here
    for k in (len(traj.states) // 2, -1):
        np.testing.assert_allclose(np.diag(traj.states[k]).real, np.diag(rho0).real,
                                   atol=1e-9)
        assert leo.fidelity_vs_ideal(traj, phi0=(1.0, 0.0))[k] == pytest.approx(1.0, abs=1e-9)


def test_zero_amplitude_square_equals_none(leo_params):
    psi0 = initial_state_vector("plus", 1)
    a = leo.propagate_leo(psi0, leo_params, PulseSpec(kind="square", amplitude=0.0, tau_c=0.1),
                          1.0, dt=1e-4)
    b = leo.propagate_leo(psi0, leo_params, None, 1.0, dt=1e-4)
    np.testing.assert_array_equal(a.states, b.states)
    np.testing.assert_array_equal(a.f2, b.f2)


def test_fidelity_vs_ideal_initial_value(leo_params):
    psi0 = initial_state_vector("plus", 1)
    traj = leo.propagate_leo(psi0, leo_params, None, 0.5, dt=1e-4)
    fid = leo.fidelity_vs_ideal(traj)
    assert fid[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(fid <= 1 + 1e-9)


def test_free_ideal_dynamics_keeps_fidelity_one(leo_params):
    # lam = 0, kappa = 0, no control: dynamics equals the ideal reference
    p = JCParams(omega=1.0, omega_c=1.0, kappa=0.0, lam=0.0, gamma=0.4)
    psi0 = initial_state_vector("plus", 1)
    traj = leo.propagate_leo(psi0, p, None, 2.0, dt=1e-4)
    assert np.max(np.abs(leo.fidelity_vs_ideal(traj, p) - 1)) < 1e-9


def test_excitation_number_nonincreasing_without_control(leo_params):
    psi0 = initial_state_vector("plus", 1)
    traj = leo.propagate_leo(psi0, leo_params, None, 5.0, dt=1e-4)
    n_op = excitation_number(1)
    n_t = np.einsum("ij,tji->t", n_op, traj.states).real
    assert np.all(np.diff(n_t) < 1e-10)


def test_ensemble_single_run_bands_collapse(leo_params):
    spec = PulseSpec(kind="square", amplitude=100.0, tau_c=0.1, jitter_fraction=0.05)
    bands = leo.run_noisy_ensemble(spec, leo_params, 1, 0.5, dt=1e-4, seed=3)
    np.testing.assert_array_equal(bands.mean, bands.low)
    np.testing.assert_array_equal(bands.mean, bands.high)


def test_misaligned_dt_rejected(leo_params):
    psi0 = initial_state_vector("plus", 1)
    with pytest.raises(ValidationError):
        leo.propagate_leo(psi0, leo_params, SQUARE, 1.0, dt=3e-4)


def test_unstable_step_raises_with_time(leo_params):
    psi0 = initial_state_vector("plus", 1)
    with pytest.raises(NumericalInstabilityError) as exc:
        leo.propagate_leo(psi0, leo_params, SQUARE, 10.0, dt=0.025, stride=1)
    assert exc.value.time is not None


def test_o_norm_and_kernel_series(leo_params):
    psi0 = initial_state_vector("plus", 1)
    traj = leo.propagate_leo(psi0, leo_params, None, 1.0, dt=1e-4)
    n1, n2 = leo.o_norm_series(traj)
    assert n1[0] == 0 and n2[0] == 0
    assert n2[-1] > 0
    gk = leo.g_kernel_series(traj)
    # leading term of the kernel is the constant lam gamma / 2
    assert gk[0] == pytest.approx(leo_params.lam * leo_params.gamma / 2)


def test_dt_halving_convergence(leo_params):
    psi0 = initial_state_vector("plus", 1)
    fids = []
    for dt in (1e-4, 5e-5):
        traj = leo.propagate_leo(psi0, leo_params, SQUARE, 2.0, dt=dt)
        fids.append(leo.fidelity_vs_ideal(traj)[-1])
    assert abs(fids[0] - fids[1]) < 1e-8
