"""Exact non-Markovian dynamics of the controlled system.

The dissipative part of the master equation is carried entirely by the
memory operator O(t) = f1(t)|g0><e0| + f2(t)|g0><g1|, whose components obey
the closed ODE pair

    df1/dt = (i omega - gamma_eff) f1 + (i kappa + lam f1) f2
    df2/dt = lam gamma / 2 + i kappa f1
             + (i (omega_c - 2 c(t)) - gamma_eff) f2 + lam f2^2

obtained by differentiating the memory integrals of the two-variable kernel
system under the integral sign (the Lorentzian kernel satisfies
d/dt alpha = -gamma_eff alpha, and the equal-time values are 0 and lam).
The two-variable system itself is solved independently in :mod:`.ogrid` and
the two routes are cross-checked to 1e-6; see :mod:`.validation`.

The density matrix evolves under

    drho/dt = -i [H_s + c(t) R, rho] + [L, rho O^dag] - [L^dag, O rho]

which preserves the trace exactly and Hermiticity structurally.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _integrators
from .errors import NumericalInstabilityError, ValidationError
from .model import (JCParams, build_lindblad, build_system_hamiltonian,
                    leo_diagonal, state_index)
from .pulses import PulseRealization, PulseSpec, check_step_alignment, realize, stage_values
from .states import density_matrix, check_density

# run-time invariant tolerances for stored trajectory samples
TRAJ_TRACE_TOL = 1e-9
TRAJ_HERM_TOL = 1e-10
TRAJ_EIG_TOL = 1e-6


class OOperatorState(NamedTuple):
    """The pair of complex memory integrals driving dissipation."""

    f1: complex
    f2: complex


def o_operator_derivative(t: float, o: OOperatorState, p: JCParams,
                          c: float) -> OOperatorState:
    """Time derivative of the memory integrals at control value c = c(t)."""
    f1, f2 = complex(o[0]), complex(o[1])
    ge = p.gamma_eff
    df1 = (1j * p.omega - ge) * f1 + (1j * p.kappa + p.lam * f1) * f2
    df2 = (p.lam * p.gamma / 2 + 1j * p.kappa * f1
           + (1j * (p.omega_c - 2 * c) - ge) * f2 + p.lam * f2 * f2)
    return OOperatorState(df1, df2)


def o_operator_matrix(o: OOperatorState, n_max: int) -> np.ndarray:
    """Assemble O(t) on the full space."""
    d = 2 * (n_max + 1)
    m = np.zeros((d, d), dtype=complex)
    m[state_index(0, 0, n_max), state_index(1, 0, n_max)] = o[0]
    m[state_index(0, 0, n_max), state_index(0, 1, n_max)] = o[1]
    return m


@dataclass(frozen=True)
class LeoTrajectory:
    """Stride-sampled output of a controlled non-Markovian run."""

    times: np.ndarray
    states: np.ndarray          # (n_samples, d, d)
    f1: np.ndarray              # memory integrals at the sample times
    f2: np.ndarray
    params: JCParams
    realization: PulseRealization
    dt: float
    max_trace_dev: float

    @property
    def n_samples(self) -> int:
        return len(self.times)


def _validate_stored(states: np.ndarray, times: np.ndarray,
                     trace_tol=TRAJ_TRACE_TOL, herm_tol=TRAJ_HERM_TOL,
                     eig_tol=TRAJ_EIG_TOL) -> None:
    """Structural invariants on every stored sample; names the first bad time."""
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


def _resolve_pulse(pulse, horizon, dt, seed, run_index):
    if isinstance(pulse, PulseRealization):
        return pulse
    if pulse is None:
        pulse = PulseSpec(kind="none")
    check_step_alignment(pulse, dt)
    return realize(pulse, horizon, seed=seed, run_index=run_index, edge_grid=dt)


def propagate_leo(rho0, p: JCParams, pulse, horizon: float, dt: float = 1e-4,
                  seed: int | None = None, run_index: int = 0, stride: int = 10,
                  validate: bool = True) -> LeoTrajectory:
    """Propagate rho and the memory integrals with the shared RK4 stepper.

    ``pulse`` may be a PulseSpec (realized here, jittered edges quantized to
    the dt grid) or a prebuilt PulseRealization.
    """
    rho0 = density_matrix(rho0)
    check_density(rho0)
    if rho0.shape[0] != p.dim:
        raise ValidationError(f"initial state dim {rho0.shape[0]} != model dim {p.dim}")
    n_steps = int(round(horizon / dt))
    if abs(n_steps * dt - horizon) > 1e-9 * max(horizon, 1.0):
        raise ValidationError(f"horizon {horizon} is not an integer number of steps dt={dt}")
    if n_steps % stride != 0:
        raise ValidationError(f"stride {stride} must divide the step count {n_steps}")
    real = _resolve_pulse(pulse, horizon, dt, seed, run_index)
    cst = stage_values(real, n_steps, dt)

    states, f1s, f2s, max_tr, fail = _integrators.leo_rk4(
        np.ascontiguousarray(rho0, dtype=complex),
        np.ascontiguousarray(build_system_hamiltonian(p)),
        leo_diagonal(p.n_max),
        np.ascontiguousarray(build_lindblad(p)),
        state_index(0, 0, p.n_max), state_index(0, 1, p.n_max), state_index(1, 0, p.n_max),
        float(p.omega), float(p.omega_c), float(p.kappa), float(p.lam),
        float(p.gamma), complex(p.gamma_eff),
        cst, float(dt), n_steps, stride)
    if fail >= 0:
        raise NumericalInstabilityError("propagation diverged", time=fail * dt)
    times = dt * stride * np.arange(n_steps // stride + 1)
    if validate:
        _validate_stored(states, times)
    return LeoTrajectory(times=times, states=states, f1=f1s, f2=f2s, params=p,
                         realization=real, dt=dt, max_trace_dev=max_tr)


def solve_o_closed(p: JCParams, pulse, horizon: float, dt: float = 1e-4,
                   stride: int = 1, seed: int | None = None, run_index: int = 0):
    """Integrate the memory integrals alone; returns (times, f1, f2)."""
    n_steps = int(round(horizon / dt))
    if n_steps % stride != 0:
        raise ValidationError(f"stride {stride} must divide the step count {n_steps}")
    real = _resolve_pulse(pulse, horizon, dt, seed, run_index)
    cst = stage_values(real, n_steps, dt)
    f1s, f2s = _integrators.f_closed_rk4(
        float(p.omega), float(p.omega_c), float(p.kappa), float(p.lam),
        float(p.gamma), complex(p.gamma_eff), cst, float(dt), n_steps, stride)
    times = dt * stride * np.arange(n_steps // stride + 1)
    return times, f1s, f2s


def ideal_state_vectors(p: JCParams, times: np.ndarray, phi0=None) -> np.ndarray:
    """Reference states evolved by the protected-subspace Hamiltonian
    omega sigma_z / 2 alone: the cavity stays in vacuum and the atom
    amplitudes pick up e^{+-i omega t / 2} phases."""
    if phi0 is None:
        cg, ce = 1 / np.sqrt(2), 1 / np.sqrt(2)
    else:
        cg, ce = complex(phi0[0]), complex(phi0[1])
        n = np.hypot(abs(cg), abs(ce))
        cg, ce = cg / n, ce / n
    out = np.zeros((len(times), p.dim), dtype=complex)
    out[:, state_index(0, 0, p.n_max)] = cg * np.exp(1j * p.omega * times / 2)
    out[:, state_index(1, 0, p.n_max)] = ce * np.exp(-1j * p.omega * times / 2)
    return out


def fidelity_vs_ideal(traj: LeoTrajectory, p: JCParams | None = None, phi0=None) -> np.ndarray:
    """Fidelity of each stored state against the ideally evolved pure state."""
    p = p or traj.params
    phi = ideal_state_vectors(p, traj.times, phi0)
    vals = np.einsum("ti,tij,tj->t", phi.conj(), traj.states, phi).real
    return np.clip(vals, 0.0, None)


@dataclass(frozen=True)
class EnsembleBands:
    """Pointwise fidelity statistics over jitter realizations."""

    times: np.ndarray
    mean: np.ndarray
    low: np.ndarray
    high: np.ndarray
    n_runs: int


def run_noisy_ensemble(spec: PulseSpec, p: JCParams, n_runs: int, horizon: float,
                       dt: float = 1e-4, seed: int = 1, stride: int = 10,
                       rho0=None, phi0=None) -> EnsembleBands:
    """Fidelity bands over independent jitter realizations.

    Run k draws its realization from (seed, run index k); the reduction is
    pointwise and order-independent, so results are deterministic.
    """
    if n_runs < 1:
        raise ValidationError("n_runs must be >= 1")
    if rho0 is None:
        from .model import initial_state_vector
        rho0 = initial_state_vector("plus", p.n_max)
    acc = None
    for k in range(n_runs):
        traj = propagate_leo(rho0, p, spec, horizon, dt=dt, seed=seed,
                             run_index=k, stride=stride)
        fid = fidelity_vs_ideal(traj, p, phi0)
        if acc is None:
            acc = {"times": traj.times, "sum": fid.copy(),
                   "low": fid.copy(), "high": fid.copy()}
        else:
            acc["sum"] += fid
            np.minimum(acc["low"], fid, out=acc["low"])
            np.maximum(acc["high"], fid, out=acc["high"])
    return EnsembleBands(times=acc["times"], mean=acc["sum"] / n_runs,
                         low=acc["low"], high=acc["high"], n_runs=n_runs)


def o_norm_series(traj: LeoTrajectory):
    """(|f1|, |f2|) at the stored sample times."""
    return np.abs(traj.f1), np.abs(traj.f2)


def g_kernel_series(traj: LeoTrajectory, p: JCParams | None = None) -> np.ndarray:
    """Diagnostic kernel lam (gamma/2 + f2^2) + i kappa f1 along the run."""
    p = p or traj.params
    return p.lam * (p.gamma / 2 + traj.f2 ** 2) + 1j * p.kappa * traj.f1


def exact_unitary_states(p: JCParams, real: PulseRealization, times: np.ndarray,
                         psi0: np.ndarray) -> np.ndarray:
    """Closed-system reference: exact piecewise propagator for piecewise-
    constant controls (matrix exponentials between breakpoints)."""
    if not real.piecewise_constant:
        raise ValidationError("exact unitary reference needs a piecewise-constant pulse")
    import scipy.linalg as sla

    h_s = build_system_hamiltonian(p)
    r = np.diag(leo_diagonal(p.n_max)).astype(complex)
    edges = [e for e in np.atleast_1d(real.edges) if 0.0 < e]
    out = np.zeros((len(times), p.dim), dtype=complex)
    psi = psi0.astype(complex) / np.linalg.norm(psi0)
    t_prev = 0.0
    k_edge = 0
    for i, t in enumerate(times):
        while k_edge < len(edges) and edges[k_edge] <= t:
            seg = edges[k_edge] - t_prev
            if seg > 0:
                c = float(real.value(t_prev + seg / 2))
                psi = sla.expm(-1j * (h_s + c * r) * seg) @ psi
            t_prev = edges[k_edge]
            k_edge += 1
        if t > t_prev:
            c = float(real.value(t_prev + (t - t_prev) / 2))
            psi = sla.expm(-1j * (h_s + c * r) * (t - t_prev)) @ psi
            t_prev = t
        out[i] = psi
    return out
