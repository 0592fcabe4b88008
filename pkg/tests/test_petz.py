import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jccontrol import channels, petz, states
from jccontrol.errors import NumericalInstabilityError, ValidationError
from jccontrol.model import (SIGMA_MINUS, initial_state_vector)


def two_level_decay():
    return petz.LindbladModel(np.zeros((2, 2)), (SIGMA_MINUS,))


def test_lindblad_derivative_unit_decay():
    m = two_level_decay()
    rho_e = np.diag([0.0, 1.0]).astype(complex)
    d = petz.lindblad_derivative(rho_e, m)
    assert d[1, 1] == pytest.approx(-1.0)
    assert d[0, 0] == pytest.approx(1.0)


def test_lindblad_derivative_traceless_and_superop(petz_params, rng):
    m = petz.LindbladModel.from_params(petz_params)
    rho = channels.random_density(4, rng)
    d = petz.lindblad_derivative(rho, m)
    assert abs(np.trace(d)) < 1e-12
    s = channels.lindblad_superoperator(m)
    np.testing.assert_allclose(d, channels.superop_apply(s, rho), atol=1e-12)


def test_forward_analytic_reduced(petz_params):
    from jccontrol.analysis import decay_amplitude
    m = petz.LindbladModel.from_params(petz_params)
    psi0 = initial_state_vector("plus", 1)
    fwd = petz.forward_propagate(psi0, m, 2.0, 1e-3)
    red = states.reduced_atom_states(np.asarray(fwd.states), 1)
    g = decay_amplitude(fwd.times, petz_params.lam, petz_params.kappa)
    np.testing.assert_allclose(red[:, 1, 1].real, 0.5 * np.abs(g) ** 2, atol=1e-4)
    np.testing.assert_allclose(red[:, 1, 0], 0.5 * g * np.exp(-1j * fwd.times), atol=1e-4)


def test_forward_unitary_when_no_lindblads(petz_params):
    m = petz.LindbladModel(petz.LindbladModel.from_params(petz_params).h, ())
    psi0 = initial_state_vector("plus", 1)
    fwd = petz.forward_propagate(psi0, m, 1.0, 1e-3)
    pur = [states.purity(x) for x in np.asarray(fwd.states)]
    np.testing.assert_allclose(pur, 1.0, atol=1e-10)


def test_sqrt_ratio_phase_values():
    assert petz.sqrt_ratio_phase(0.3, 0.3) == 0
    assert petz.sqrt_ratio_phase(1.0, 0.0) == pytest.approx(-0.5j)
    assert petz.sqrt_ratio_phase(0.0, 0.0) == 0


@settings(deadline=None, max_examples=50)
@given(st.floats(0, 1), st.floats(0, 1))
def test_sqrt_ratio_phase_antisymmetric_imaginary(x, y):
    c1 = petz.sqrt_ratio_phase(x, y)
    c2 = petz.sqrt_ratio_phase(y, x)
    assert c1.real == 0
    assert c1 == -c2


def test_reversal_generators_maximally_mixed(petz_params):
    m = petz.LindbladModel.from_params(petz_params)
    gen = petz.reversal_generators(np.eye(4, dtype=complex) / 4, m)
    np.testing.assert_allclose(gen.h_r, -m.h, atol=1e-12)
    np.testing.assert_allclose(gen.l_r[0], m.lindblads[0].conj().T, atol=1e-12)
    assert not gen.support_leak


def test_reversal_generators_multiplication_oracle(petz_params, rng):
    m = petz.LindbladModel.from_params(petz_params)
    rho = channels.random_density(4, rng)
    gen = petz.reversal_generators(rho, m)
    rt = states.psd_sqrt(rho)
    np.testing.assert_allclose(gen.l_r[0] @ rt, rt @ m.lindblads[0].conj().T, atol=1e-9)
    assert np.max(np.abs(gen.h_r - gen.h_r.conj().T)) < 1e-10


def test_reversal_generators_pure_reference_projected(petz_params):
    m = petz.LindbladModel.from_params(petz_params)
    psi = initial_state_vector("plus", 1)
    proj = np.outer(psi, psi.conj())
    gen = petz.reversal_generators(proj, m, epsilon=1e-10)
    ld = m.lindblads[0].conj().T
    np.testing.assert_allclose(gen.l_r[0], proj @ ld @ proj, atol=1e-12)
    # L^dag maps the support out of itself here, so the leak is flagged
    assert gen.support_leak


@settings(deadline=None, max_examples=20)
@given(st.integers(0, 2**31 - 1))
def test_reversal_hamiltonian_hermitian_random_reference(seed):
    r = np.random.default_rng(seed)
    p = petz.LindbladModel(np.zeros((4, 4)),
                           (r.standard_normal((4, 4)) + 1j * r.standard_normal((4, 4)),))
    rho = channels.random_density(4, r)
    gen = petz.reversal_generators(rho, p)
    assert np.max(np.abs(gen.h_r - gen.h_r.conj().T)) < 1e-10


def test_reverse_propagate_initial_condition(petz_params):
    m = petz.LindbladModel.from_params(petz_params)
    psi0 = initial_state_vector("plus", 1)
    fwd = petz.forward_propagate(psi0, m, 1.0, 1e-3)
    bwd = petz.reverse_propagate(fwd, m)
    np.testing.assert_array_equal(bwd.states[0], np.asarray(fwd.states)[-1])


def test_reverse_propagate_unitary_model(petz_params):
    m = petz.LindbladModel(petz.LindbladModel.from_params(petz_params).h, ())
    psi0 = initial_state_vector("plus", 1)
    fwd = petz.forward_propagate(psi0, m, 1.0, 1e-3)
    bwd = petz.reverse_propagate(fwd, m)
    diff = np.asarray(bwd.states) - np.asarray(fwd.states)[::-1]
    assert np.max(np.abs(diff)) < 1e-9


def test_reverse_retraces_forward_short(petz_params):
    m = petz.LindbladModel.from_params(petz_params)
    psi0 = initial_state_vector("plus", 1)
    fwd = petz.forward_propagate(psi0, m, 2.0, 1e-3)
    bwd = petz.reverse_propagate(fwd, m, epsilon=1e-10)
    diff = np.asarray(bwd.states) - np.asarray(fwd.states)[::-1]
    td = 0.5 * np.abs(np.linalg.eigvalsh(diff)).sum(axis=1)
    assert td.max() < 1e-3
    assert states.fidelity(bwd.states[-1], fwd.states[0]) > 1 - 1e-4


def test_support_cutoff_sweep_no_blowup(petz_params):
    m = petz.LindbladModel.from_params(petz_params)
    psi0 = initial_state_vector("plus", 1)
    fwd = petz.forward_propagate(psi0, m, 2.0, 1e-3)
    errs = []
    for eps in (1e-8, 1e-12):
        bwd = petz.reverse_propagate(fwd, m, epsilon=eps)
        diff = np.asarray(bwd.states) - np.asarray(fwd.states)[::-1]
        errs.append(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum(axis=1).max())
    assert max(errs) / min(errs) < 10


def test_stationary_maximally_mixed():
    # H = 0 with a unitary collapse operator keeps I/2 fixed both ways
    m = petz.LindbladModel(np.zeros((2, 2)), (0.7 * np.eye(2, dtype=complex),))
    rho0 = np.eye(2, dtype=complex) / 2
    fwd = petz.forward_propagate(rho0, m, 1.0, 1e-2)
    assert np.max(np.abs(np.asarray(fwd.states) - rho0)) < 1e-12
    bwd = petz.reverse_propagate(fwd, m)
    assert np.max(np.abs(np.asarray(bwd.states) - rho0)) < 1e-10


def test_rotated_reversal_endpoints(petz_params):
    m = petz.LindbladModel.from_params(petz_params)
    psi0 = initial_state_vector("plus", 1)
    fwd = petz.forward_propagate(psi0, m, 2.0, 1e-3)
    rot = petz.rotated_reversal(fwd, m)
    np.testing.assert_array_equal(rot.states[0], np.asarray(fwd.states)[-1])
    w, v = np.linalg.eigh(m.h)
    u = (v * np.exp(-1j * w * 2.0)) @ v.conj().T
    target = u @ np.asarray(fwd.states)[0] @ u.conj().T
    assert states.trace_distance(rot.states[-1], target) < 1e-3


def test_rotated_constant_for_unitary_model(petz_params):
    m = petz.LindbladModel(petz.LindbladModel.from_params(petz_params).h, ())
    psi0 = initial_state_vector("plus", 1)
    fwd = petz.forward_propagate(psi0, m, 1.0, 1e-3)
    rot = petz.rotated_reversal(fwd, m)
    w, v = np.linalg.eigh(m.h)
    u = (v * np.exp(-1j * w * 1.0)) @ v.conj().T
    target = u @ np.asarray(fwd.states)[0] @ u.conj().T
    assert np.max(np.abs(np.asarray(rot.states) - target)) < 1e-9


def test_petz_map_identity_channel(rng):
    rho0 = channels.random_density(4, rng)
    out = petz.petz_map_apply(rho0, [np.eye(4, dtype=complex)], rho0)
    np.testing.assert_allclose(out, rho0, atol=1e-12)


def test_petz_map_recovers_reference(rng):
    ch = channels.random_channel(4, 3, rng)
    rho0 = channels.random_density(4, rng)
    sigma = channels.kraus_apply(ch, rho0)
    rec = petz.petz_map_apply(rho0, ch, sigma)
    np.testing.assert_allclose(rec, rho0, atol=1e-10)


def test_petz_map_rejects_incomplete_kraus(rng):
    rho0 = channels.random_density(4, rng)
    with pytest.raises(ValidationError):
        petz.petz_map_apply(rho0, [0.5 * np.eye(4, dtype=complex)], rho0)


def test_forward_spill_to_file(petz_params, tmp_path):
    m = petz.LindbladModel.from_params(petz_params)
    psi0 = initial_state_vector("plus", 1)
    mem = petz.forward_propagate(psi0, m, 0.5, 1e-2)
    spilled = petz.forward_propagate(psi0, m, 0.5, 1e-2, spill_threshold=8,
                                     spill_dir=tmp_path)
    assert spilled.spill_path is not None and spilled.spill_path.exists()
    assert isinstance(spilled.states, np.memmap)
    np.testing.assert_array_equal(np.asarray(spilled.states), np.asarray(mem.states))
    bwd = petz.reverse_propagate(spilled, m)
    assert states.fidelity(bwd.states[-1], mem.states[0]) > 1 - 1e-4


def test_backward_divergence_reports_time(petz_params):
    m = petz.LindbladModel.from_params(petz_params)
    psi0 = initial_state_vector("plus", 1)
    fwd = petz.forward_propagate(psi0, m, 1.0, 1e-3)
    with pytest.raises(NumericalInstabilityError) as exc:
        petz.reverse_propagate(fwd, m, divergence_tol=1e-18)
    assert exc.value.time is not None
