"""Reduced-atom observables and non-Markovianity diagnostics.

The uncontrolled atom dynamics admits a closed form: excited population and
coherence decay with the amplitude

    g(t) = e^{-lam^2 t/4} [ lam^2 sinh(a t/4)/a + cosh(a t/4) ],
    a = sqrt(lam^4 - 16 kappa^2)  (principal complex root),

so the trace distance of the optimal state pair (|e> +- |g>)/sqrt(2) is
|g(t)| and the quantum Fisher information of the preparation angle is
4 |g(t)|^2. |g| is monotone iff kappa <= lam^2/4; beyond that threshold the
atom dynamics is non-Markovian even though the composite system is Markov.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .model import SIGMA_X, SIGMA_Y, SIGMA_Z, superposition_angle_state
from .petz import (DEFAULT_EPSILON, ForwardTrajectory, LindbladModel,
                   forward_propagate, reverse_propagate)
from .states import reduced_atom_states

_PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)


def bloch_vector(rho_a: np.ndarray) -> np.ndarray:
    """r_i = tr[sigma_i rho] of a 2x2 state; |e> sits at +z."""
    rho_a = np.asarray(rho_a, dtype=complex)
    if rho_a.shape != (2, 2):
        raise ValidationError(f"bloch_vector expects a 2x2 state, got {rho_a.shape}")
    r = np.array([np.trace(s @ rho_a).real for s in _PAULIS])
    if np.linalg.norm(r) > 1 + 1e-9:
        raise ValidationError(f"Bloch vector length {np.linalg.norm(r):.12g} exceeds 1")
    return r


def bloch_to_density(r) -> np.ndarray:
    """Inverse of bloch_vector."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise ValidationError("need a real 3-vector")
    if np.linalg.norm(r) > 1 + 1e-9:
        raise ValidationError(f"Bloch vector length {np.linalg.norm(r):.12g} exceeds 1")
    out = 0.5 * (np.eye(2, dtype=complex) + r[0] * SIGMA_X + r[1] * SIGMA_Y + r[2] * SIGMA_Z)
    return out


def bloch_series(states: np.ndarray, n_max: int) -> np.ndarray:
    """Bloch vectors of the reduced atom along a trajectory, shape (n, 3)."""
    red = reduced_atom_states(states, n_max)
    out = np.empty((len(red), 3))
    for i, s in enumerate(_PAULIS):
        out[:, i] = np.einsum("ab,tba->t", s, red).real
    return out


@dataclass(frozen=True)
class DecayAmplitude:
    """Closed-form reduced-atom decay amplitude for given couplings."""

    lam: float
    kappa: float

    @property
    def a(self) -> complex:
        return complex(np.sqrt(complex(self.lam ** 4 - 16 * self.kappa ** 2)))

    def __call__(self, t):
        return decay_amplitude(t, self.lam, self.kappa)


def decay_amplitude(t, lam: float, kappa: float):
    """g(t); handles the removable a -> 0 singularity via the series limit."""
    t = np.asarray(t, dtype=float)
    a = complex(np.sqrt(complex(lam ** 4 - 16 * kappa ** 2)))
    x = a * t / 4
    small = np.abs(x) < 1e-6
    with np.errstate(all="ignore"):
        if abs(a) == 0.0:
            sinh_over_a = (t / 4) * (1 + x * x / 6)
        else:
            sinh_over_a = np.where(small, (t / 4) * (1 + x * x / 6), np.sinh(x) / a)
    g = np.exp(-lam ** 2 * t / 4) * (lam ** 2 * sinh_over_a + np.cosh(x))
    g = np.asarray(g, dtype=complex)
    return g if g.ndim else complex(g)


def optimal_pair_trace_distance(times, lam: float, kappa: float) -> np.ndarray:
    """Trace distance of the optimal pair (|e> +- |g>)/sqrt(2): |g(t)|."""
    return np.abs(decay_amplitude(times, lam, kappa))


def fisher_information_bloch(r, dr) -> float:
    """Single-parameter quantum Fisher information from a Bloch vector and
    its parameter derivative:

        F = dr.dr + (r.dr)^2 / (1 - |r|^2)

    On the pure shell the second term is the 0/0 limit along pure families,
    which vanishes when r.dr = 0; anything else there is inconsistent input.
    """
    r = np.asarray(r, dtype=float)
    dr = np.asarray(dr, dtype=float)
    r2 = float(r @ r)
    if r2 > 1 + 1e-9:
        raise ValidationError(f"|r|^2 = {r2:.12g} exceeds 1")
    rdr = float(r @ dr)
    first = float(dr @ dr)
    denom = 1.0 - r2
    if denom < 1e-9:
        if abs(rdr) < 1e-9:
            return first
        raise ValidationError(
            "pure state with r.dr != 0: the parameter family leaves the Bloch sphere")
    return first + rdr * rdr / denom


def sld_fisher(rho: np.ndarray, drho: np.ndarray) -> float:
    """Oracle route: symmetric logarithmic derivative in the rho eigenbasis,
    F = tr[rho Lbar^2] with drho = {rho, Lbar}/2."""
    w, v = np.linalg.eigh(np.asarray(rho, dtype=complex))
    dr = v.conj().T @ np.asarray(drho, dtype=complex) @ v
    d = len(w)
    lbar = np.zeros((d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            s = w[i] + w[j]
            if s > 1e-12:
                lbar[i, j] = 2 * dr[i, j] / s
    rho_eig = np.diag(w).astype(complex)
    return float(np.trace(rho_eig @ lbar @ lbar).real)


@dataclass(frozen=True)
class FisherTrajectory:
    """Finite-difference Fisher information along a propagated scenario."""

    times: np.ndarray
    forward: np.ndarray
    backward: np.ndarray | None  # over t' in [0, tau], None without reversal
    theta: float
    delta_theta: float


def fisher_information_trajectory(m: LindbladModel, tau: float, dt: float,
                                  theta: float = math.pi / 4,
                                  delta_theta: float = 1e-5,
                                  n_max: int = 1,
                                  include_reversal: bool = False,
                                  epsilon: float = DEFAULT_EPSILON) -> FisherTrajectory:
    """Central finite difference over the preparation angle on two propagated
    trajectories, reduced to the atom.

    With reversal enabled, each offset angle gets its own backward run whose
    generators are built from its own forward trajectory.
    """
    runs = []
    for th in (theta - delta_theta, theta + delta_theta):
        psi = superposition_angle_state(th, n_max)
        fwd = forward_propagate(psi, m, tau, dt, validate=False)
        runs.append(fwd)
    r_lo = bloch_series(np.asarray(runs[0].states), n_max)
    r_hi = bloch_series(np.asarray(runs[1].states), n_max)
    fwd_f = _fisher_from_pair(r_lo, r_hi, delta_theta)
    bwd_f = None
    if include_reversal:
        b_lo = reverse_propagate(runs[0], m, epsilon, validate=False)
        b_hi = reverse_propagate(runs[1], m, epsilon, validate=False)
        rb_lo = bloch_series(np.asarray(b_lo.states), n_max)
        rb_hi = bloch_series(np.asarray(b_hi.states), n_max)
        bwd_f = _fisher_from_pair(rb_lo, rb_hi, delta_theta)
    times = runs[0].times
    return FisherTrajectory(times=times, forward=fwd_f, backward=bwd_f,
                            theta=theta, delta_theta=delta_theta)


def _fisher_from_pair(r_lo, r_hi, delta_theta):
    dr = (r_hi - r_lo) / (2 * delta_theta)
    rm = 0.5 * (r_hi + r_lo)
    out = np.empty(len(rm))
    for k in range(len(rm)):
        out[k] = fisher_information_bloch(rm[k], dr[k])
    return out


def nonmarkov_measure(d_series, dt: float, slope_tol: float = 1e-6) -> float:
    """Integral of the positive part of dD/dt: the sum of the rises of D,
    with a slope deadband suppressing jitter-level increments."""
    d_series = np.asarray(d_series, dtype=float)
    inc = np.diff(d_series)
    keep = inc > slope_tol * dt
    return float(np.sum(inc[keep]))


def noncontractive_intervals(d_series, dt: float, slope_tol: float = 1e-6) -> list:
    """Maximal intervals (t_start, t_end) on which D increases faster than
    the deadband slope."""
    d_series = np.asarray(d_series, dtype=float)
    rising = np.diff(d_series) > slope_tol * dt
    out = []
    start = None
    for k, flag in enumerate(rising):
        if flag and start is None:
            start = k
        elif not flag and start is not None:
            out.append((start * dt, k * dt))
            start = None
    if start is not None:
        out.append((start * dt, len(rising) * dt))
    return out
