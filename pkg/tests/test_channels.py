import numpy as np
import pytest

from jccontrol import channels, petz


def test_vec_unvec_roundtrip(rng):
    m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    np.testing.assert_array_equal(channels.unvec(channels.vec(m)), m)


def test_superop_matches_vec_identity(rng):
    # vec(ABC) = (C^T kron A) vec(B)
    a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    b = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    c = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    np.testing.assert_allclose(np.kron(c.T, a) @ channels.vec(b),
                               channels.vec(a @ b @ c), atol=1e-12)


def test_step_channel_kraus_complete_and_correct(petz_params, rng):
    import scipy.linalg as sla
    m = petz.LindbladModel.from_params(petz_params)
    dt = 1e-2
    ks = channels.step_channel_kraus(m, dt)
    assert channels.kraus_completeness_defect(ks) < 1e-12
    rho = channels.random_density(4, rng)
    s = sla.expm(dt * channels.lindblad_superoperator(m))
    np.testing.assert_allclose(channels.kraus_apply(ks, rho),
                               channels.superop_apply(s, rho), atol=1e-12)


def test_random_channel_is_cptp(rng):
    ch = channels.random_channel(4, 3, rng)
    assert channels.kraus_completeness_defect(ch) < 1e-12
    rho = channels.random_density(4, rng)
    out = channels.kraus_apply(ch, rho)
    assert abs(np.trace(out) - 1) < 1e-12
    assert np.linalg.eigvalsh(out)[0] > -1e-12


def test_choi_of_cptp_step_is_psd(petz_params):
    m = petz.LindbladModel.from_params(petz_params)
    import scipy.linalg as sla
    s = sla.expm(1e-2 * channels.lindblad_superoperator(m))
    choi = channels.choi_from_superop(s)
    w = np.linalg.eigvalsh(0.5 * (choi + choi.conj().T))
    assert w[0] > -1e-12


def test_random_density_rank(rng):
    rho = channels.random_density(4, rng, rank=2)
    w = np.linalg.eigvalsh(rho)
    assert w[0] > -1e-12 and w[1] < 1e-12 and w[2] > 1e-6
