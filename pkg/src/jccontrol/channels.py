"""Quantum channels as superoperators and Kraus sets.

Column-stacking convention throughout: vec(A B C) = (C^T kron A) vec(B).
The one-step channel of a Lindblad generator is exp(dt * superoperator);
its Kraus operators come from the eigen-decomposition of the Choi matrix,
so completeness holds to numerical precision (a first-order truncated set
would violate it at O(dt^2)).
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .errors import ValidationError
from .petz import LindbladModel


def vec(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).T.reshape(-1)


def unvec(v: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(v.size)))
    return v.reshape(d, d).T


def lindblad_superoperator(m: LindbladModel) -> np.ndarray:
    """Matrix of rho -> -i[H, rho] + sum_n D[L_n](rho) acting on vec(rho)."""
    d = m.dim
    idm = np.eye(d, dtype=complex)
    heff = -1j * m.h
    s = np.kron(idm, heff) + np.kron(heff.conj(), idm)
    for l in m.lindblads:
        ldl = l.conj().T @ l
        s += np.kron(l.conj(), l)
        s -= 0.5 * (np.kron(idm, ldl) + np.kron(ldl.T, idm))
    return s


def superop_apply(s: np.ndarray, rho: np.ndarray) -> np.ndarray:
    return unvec(s @ vec(rho))


def choi_from_superop(s: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(s.shape[0])))
    return s.reshape(d, d, d, d).transpose(3, 1, 2, 0).reshape(d * d, d * d)


def kraus_from_superop(s: np.ndarray, tol: float = 1e-13) -> list:
    """Kraus operators of a CP map given its superoperator matrix."""
    d = int(round(np.sqrt(s.shape[0])))
    choi = choi_from_superop(s)
    choi = 0.5 * (choi + choi.conj().T)
    w, v = np.linalg.eigh(choi)
    if w[0] < -1e-9 * max(w.max(), 1.0):
        raise ValidationError(f"map is not CP: Choi eigenvalue {w[0]:.2e}")
    ops = []
    for i in range(len(w)):
        if w[i] > tol:
            ops.append(np.sqrt(w[i]) * v[:, i].reshape(d, d).T)
    return ops


def step_channel_kraus(m: LindbladModel, dt: float) -> list:
    """Kraus set of the exact one-step semigroup channel exp(dt L)."""
    s = sla.expm(dt * lindblad_superoperator(m))
    return kraus_from_superop(s)


def kraus_apply(kraus, rho: np.ndarray) -> np.ndarray:
    return sum(k @ rho @ k.conj().T for k in kraus)


def kraus_completeness_defect(kraus) -> float:
    d = kraus[0].shape[0]
    comp = sum(k.conj().T @ k for k in kraus)
    return float(np.max(np.abs(comp - np.eye(d))))


def random_channel(d: int, n_kraus: int, rng: np.random.Generator) -> list:
    """Random CPTP channel from a Haar-ish isometry (QR of a Ginibre block)."""
    g = rng.standard_normal((d * n_kraus, d)) + 1j * rng.standard_normal((d * n_kraus, d))
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.diag(r))  # fix column phases for determinism
    return [q[i * d:(i + 1) * d, :] for i in range(n_kraus)]


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random full-rank (by default) density matrix, Wishart-distributed."""
    rank = rank or d
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
