"""Markov Lindblad propagation and its Petz-map reversal.

The forward semigroup

    drho/dt = -i [H, rho] + sum_n L_n rho L_n^dag - {L_n^dag L_n, rho}/2

is retraced by a second Lindblad equation whose generators are rebuilt at
every instant from the stored forward state rho_ref = rho(tau - t'):

    H_r = -H + sum_{a,b,n} q(eta_a, eta_b) <a|M_n|b> |a><b|
    L_r,n = rho_ref^{1/2} L_n^dag rho_ref^{-1/2}
    M_n = L_r,n^dag L_r,n + L_n^dag L_n
    q(x, y) = -(i/2) (sqrt x - sqrt y) / (sqrt x + sqrt y)

with |a>, eta_a the eigenpairs of rho_ref. On the support of the reference
this choice makes the backward generator equal minus the forward one along
the trajectory, so the reversal is exact up to discretization. The inverse
square root is taken on the eigenvalue support above a relative cutoff.
"""

from __future__ import annotations

import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _integrators
from .errors import NumericalInstabilityError, ValidationError
from .model import JCParams, build_lindblad, build_system_hamiltonian
from .states import check_density, density_matrix

DEFAULT_EPSILON = 1e-10  # support cutoff, relative to the largest eigenvalue
SPILL_THRESHOLD = 4_000_000  # stored matrices above which states go to disk


@dataclass(frozen=True)
class LindbladModel:
    """Hamiltonian plus collapse operators of a Markov master equation."""

    h: np.ndarray
    lindblads: tuple

    def __post_init__(self):
        h = np.ascontiguousarray(np.asarray(self.h, dtype=complex))
        dev = np.max(np.abs(h - h.conj().T))
        if dev > 1e-12:
            raise ValidationError(f"LindbladModel.h deviates from Hermitian by {dev:.2e}")
        ls = tuple(np.ascontiguousarray(np.asarray(l, dtype=complex)) for l in self.lindblads)
        for l in ls:
            if l.shape != h.shape:
                raise ValidationError("collapse operator shape differs from H")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "lindblads", ls)

    @classmethod
    def from_params(cls, p: JCParams) -> "LindbladModel":
        return cls(build_system_hamiltonian(p), (build_lindblad(p),))

    @property
    def dim(self) -> int:
        return self.h.shape[0]

    def stacked_lindblads(self) -> np.ndarray:
        return np.ascontiguousarray(np.stack(self.lindblads)) if self.lindblads \
            else np.zeros((0, self.dim, self.dim), dtype=complex)


def lindblad_derivative(rho: np.ndarray, m: LindbladModel) -> np.ndarray:
    """Right-hand side of the forward master equation."""
    rho = np.asarray(rho, dtype=complex)
    out = -1j * (m.h @ rho - rho @ m.h)
    for l in m.lindblads:
        ld = l.conj().T
        out += l @ rho @ ld - 0.5 * (ld @ l @ rho + rho @ ld @ l)
    return out


@dataclass(frozen=True)
class ForwardTrajectory:
    """Densely stored forward run; the reversal needs random access to it."""

    tau: float
    dt: float
    states: np.ndarray
    spill_path: Path | None = None

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self.states))

    @property
    def n_steps(self) -> int:
        return len(self.states) - 1


def _allocate_states(n_states, d, spill_threshold, spill_dir):
    if n_states * d * d <= spill_threshold:
        return np.zeros((n_states, d, d), dtype=complex), None
    tmp = tempfile.NamedTemporaryFile(
        suffix=".npy", delete=False, dir=spill_dir, prefix="fwd_states_")
    tmp.close()
    path = Path(tmp.name)
    mm = np.lib.format.open_memmap(path, mode="w+", dtype=complex,
                                   shape=(n_states, d, d))
    return mm, path


def forward_propagate(rho0, m: LindbladModel, tau: float, dt: float,
                      validate: bool = True, spill_threshold: int = SPILL_THRESHOLD,
                      spill_dir=None) -> ForwardTrajectory:
    """RK4 propagation storing every step."""
    rho0 = density_matrix(rho0)
    check_density(rho0)
    n_steps = int(round(tau / dt))
    if abs(n_steps * dt - tau) > 1e-9 * max(tau, 1.0):
        raise ValidationError(f"tau {tau} is not an integer number of steps dt={dt}")
    states = _integrators.lindblad_rk4(
        np.ascontiguousarray(rho0), m.h, m.stacked_lindblads(), float(dt), n_steps)
    out, path = _allocate_states(n_steps + 1, m.dim, spill_threshold, spill_dir)
    out[:] = states
    traj = ForwardTrajectory(tau=tau, dt=dt, states=out, spill_path=path)
    if validate:
        _check_stack(np.asarray(out), traj.times)
    return traj


def _check_stack(states, times, trace_tol=1e-9, herm_tol=1e-10, eig_tol=1e-6):
    tr_dev = np.abs(np.trace(states, axis1=1, axis2=2) - 1.0)
    herm_dev = np.abs(states - states.conj().transpose(0, 2, 1)).max(axis=(1, 2))
    min_eig = np.linalg.eigvalsh(states)[:, 0]
    bad = (tr_dev > trace_tol) | (herm_dev > herm_tol) | (min_eig < -eig_tol)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise NumericalInstabilityError(
            f"state invariants violated: trace dev {tr_dev[i]:.2e}, "
            f"herm dev {herm_dev[i]:.2e}, min eig {min_eig[i]:.2e}",
            time=float(times[i]))


def sqrt_ratio_phase(eta: float, eta_prime: float) -> complex:
    """The purely imaginary, antisymmetric coefficient
    -(i/2)(sqrt x - sqrt y)/(sqrt x + sqrt y); 0 when both arguments vanish."""
    sx = np.sqrt(max(eta, 0.0))
    sy = np.sqrt(max(eta_prime, 0.0))
    if sx + sy < 1e-12:
        return 0.0 + 0.0j
    return -0.5j * (sx - sy) / (sx + sy)


@dataclass(frozen=True)
class ReversalGenerators:
    """Hamiltonian and collapse operators of the backward equation at one
    reference state."""

    h_r: np.ndarray
    l_r: tuple
    epsilon: float
    support_leak: bool = False
    leak_norm: float = 0.0


def reversal_generators(rho_ref, m: LindbladModel,
                        epsilon: float = DEFAULT_EPSILON) -> ReversalGenerators:
    """Build (H_r, L_r) at one reference state.

    ``epsilon`` is the support cutoff relative to the largest eigenvalue of
    the reference. If the reference is rank-deficient and some L_n^dag maps
    the support outside itself, the lost component cannot be represented by
    the support-projected generators; this is reported as a leak.
    """
    rho_ref = density_matrix(rho_ref)
    d = rho_ref.shape[0]
    w, v = np.linalg.eigh(rho_ref)
    w = np.maximum(w, 0.0)
    cut = epsilon * w.max()
    keep = w >= cut
    sq = np.where(keep, np.sqrt(w), 0.0)
    isq = np.where(keep, 1.0 / np.sqrt(np.where(keep, w, 1.0)), 0.0)
    rt = (v * sq) @ v.conj().T
    irt = (v * isq) @ v.conj().T

    support_leak = False
    leak_norm = 0.0
    if not keep.all():
        proj = (v * keep.astype(float)) @ v.conj().T
        comp = np.eye(d) - proj
        for l in m.lindblads:
            leak = np.linalg.norm(comp @ l.conj().T @ proj)
            leak_norm = max(leak_norm, float(leak))
        support_leak = leak_norm > 1e-10

    phase = np.zeros((d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            phase[i, j] = sqrt_ratio_phase(w[i], w[j])

    l_r = []
    h_c = np.zeros((d, d), dtype=complex)
    for l in m.lindblads:
        lr = rt @ l.conj().T @ irt
        l_r.append(lr)
        mn = lr.conj().T @ lr + l.conj().T @ l
        mn_eig = v.conj().T @ mn @ v
        h_c += v @ (phase * mn_eig) @ v.conj().T
    h_r = -m.h + h_c
    dev = np.max(np.abs(h_r - h_r.conj().T))
    if dev > 1e-10:
        raise NumericalInstabilityError(f"reversal Hamiltonian lost Hermiticity: {dev:.2e}")
    h_r = 0.5 * (h_r + h_r.conj().T)
    return ReversalGenerators(h_r=h_r, l_r=tuple(l_r), epsilon=epsilon,
                              support_leak=support_leak, leak_norm=leak_norm)


def _backward_rhs(rho, gen):
    out = -1j * (gen.h_r @ rho - rho @ gen.h_r)
    for l in gen.l_r:
        ld = l.conj().T
        out += l @ rho @ ld - 0.5 * (ld @ l @ rho + rho @ ld @ l)
    return out


@dataclass(frozen=True)
class ReversalTrajectory:
    """Backward run over t' in [0, tau]; states[k] approximates the forward
    state at tau - t'_k."""

    tau: float
    dt: float
    states: np.ndarray
    max_support_leak: float = 0.0

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self.states))


def reverse_propagate(fwd: ForwardTrajectory, m: LindbladModel,
                      epsilon: float = DEFAULT_EPSILON,
                      validate: bool = True,
                      divergence_tol: float = 1e-3) -> ReversalTrajectory:
    """Integrate the backward equation from rho(tau) with generators rebuilt
    from the stored forward states (mid-step references are linear
    interpolations of neighbouring stored states, re-decomposed)."""
    states_f = np.asarray(fwd.states)
    n = fwd.n_steps
    dt = fwd.dt
    rho = states_f[-1].copy()
    out = np.zeros_like(states_f)
    out[0] = rho
    max_leak = 0.0
    gen_right = reversal_generators(states_f[n], m, epsilon)
    for k in range(n):
        gen_a = gen_right
        mid_ref = 0.5 * (states_f[n - k] + states_f[n - k - 1])
        gen_m = reversal_generators(mid_ref, m, epsilon)
        gen_b = reversal_generators(states_f[n - k - 1], m, epsilon)
        gen_right = gen_b
        max_leak = max(max_leak, gen_a.leak_norm, gen_m.leak_norm, gen_b.leak_norm)
        k1 = _backward_rhs(rho, gen_a)
        k2 = _backward_rhs(rho + dt / 2 * k1, gen_m)
        k3 = _backward_rhs(rho + dt / 2 * k2, gen_m)
        k4 = _backward_rhs(rho + dt * k3, gen_b)
        rho = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        tr_dev = abs(np.trace(rho) - 1.0)
        if not np.isfinite(tr_dev) or tr_dev > divergence_tol:
            raise NumericalInstabilityError(
                f"backward propagation diverged (trace dev {tr_dev:.2e})",
                time=(k + 1) * dt)
        out[k + 1] = rho
    traj = ReversalTrajectory(tau=fwd.tau, dt=dt, states=out, max_support_leak=max_leak)
    if validate:
        _check_stack(out, traj.times)
    return traj


def rotated_reversal(fwd: ForwardTrajectory, m: LindbladModel,
                     epsilon: float = DEFAULT_EPSILON,
                     backward: ReversalTrajectory | None = None) -> ReversalTrajectory:
    """Rotate the backward trajectory into the frame of the ideal unitary:
    beta(t') = U(t') rho_B(t') U^dag(t'), so beta(0) is rho(tau) and
    beta(tau) lands on U(tau) rho(0) U^dag(tau)."""
    if backward is None:
        backward = reverse_propagate(fwd, m, epsilon)
    w, v = np.linalg.eigh(m.h)
    out = np.zeros_like(np.asarray(backward.states))
    for k, t in enumerate(backward.times):
        u = (v * np.exp(-1j * w * t)) @ v.conj().T
        out[k] = u @ backward.states[k] @ u.conj().T
    return ReversalTrajectory(tau=backward.tau, dt=backward.dt, states=out,
                              max_support_leak=backward.max_support_leak)


def petz_map_apply(rho0_ref, kraus, x, epsilon: float = DEFAULT_EPSILON,
                   completeness_tol: float = 1e-10) -> np.ndarray:
    """Apply the recovery map of channel ``kraus`` with reference rho0_ref:

        R(x) = rho0^{1/2} N^dag[ sigma^{-1/2} x sigma^{-1/2} ] rho0^{1/2}

    with sigma = N(rho0). Positive and trace preserving on the support of
    sigma; recovers the reference exactly: R(N(rho0)) = rho0.
    """
    rho0_ref = density_matrix(rho0_ref)
    x = np.asarray(x, dtype=complex)
    d = rho0_ref.shape[0]
    comp = sum(k.conj().T @ k for k in kraus)
    dev = np.max(np.abs(comp - np.eye(d)))
    if dev > completeness_tol:
        raise ValidationError(f"Kraus set not complete: deviation {dev:.2e}")
    sigma = sum(k @ rho0_ref @ k.conj().T for k in kraus)
    w, v = np.linalg.eigh(sigma)
    w = np.maximum(w, 0.0)
    cut = epsilon * w.max()
    keep = w >= cut
    isq = np.where(keep, 1.0 / np.sqrt(np.where(keep, w, 1.0)), 0.0)
    sig_irt = (v * isq) @ v.conj().T
    w0, v0 = np.linalg.eigh(rho0_ref)
    rt0 = (v0 * np.sqrt(np.maximum(w0, 0.0))) @ v0.conj().T
    y = sig_irt @ x @ sig_irt
    z = sum(k.conj().T @ y @ k for k in kraus)
    return rt0 @ z @ rt0
