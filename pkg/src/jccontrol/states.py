"""Dense complex linear algebra and state metrics at small fixed dimension.

Everything here operates on plain complex ndarrays. Density matrices on the
atom-cavity space use the basis ordering

    index = atom_index * (n_max + 1) + photon_number,

with atom_index 0 = ground, 1 = excited, so for n_max = 1 the basis reads
[g0, g1, e0, e1]. All functions are pure; nothing mutates its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# default structural tolerances for a density matrix
HERM_TOL = 1e-12
TRACE_TOL = 1e-9
PSD_TOL = 1e-9


def check_density(rho: np.ndarray, herm_tol: float = HERM_TOL,
                  trace_tol: float = TRACE_TOL, psd_tol: float = PSD_TOL) -> None:
    """Raise ValidationError unless rho is Hermitian, unit-trace and PSD
    within the given tolerances."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValidationError(f"density matrix must be square, got shape {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise ValidationError("density matrix has non-finite entries")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        raise ValidationError(f"not Hermitian: max deviation {herm:.3e} > {herm_tol:.1e}")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise ValidationError(f"trace {tr:.12g} deviates from 1 by more than {trace_tol:.1e}")
    wmin = np.linalg.eigvalsh(rho)[0]
    if wmin < -psd_tol:
        raise ValidationError(f"negative eigenvalue {wmin:.3e} below -{psd_tol:.1e}")


@dataclass(frozen=True)
class DensityState:
    """A validated density matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.ascontiguousarray(np.asarray(self.matrix, dtype=complex))
        check_density(m)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_statevector(cls, psi) -> "DensityState":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def density_matrix(state) -> np.ndarray:
    """Coerce a DensityState, state vector, or raw matrix to a complex ndarray."""
    if isinstance(state, DensityState):
        return state.matrix
    arr = np.asarray(state, dtype=complex)
    if arr.ndim == 1:
        arr = arr / np.linalg.norm(arr)
        return np.outer(arr, arr.conj())
    return arr


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigen-decomposition of a Hermitian matrix.

    Eigenvalues ascend; eigenvectors are orthonormal columns with the phase
    fixed so the first component of significant modulus is real positive.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def hermitian_eig(m: np.ndarray, herm_tol: float = 1e-10) -> SpectralDecomposition:
    """Eigen-decompose a Hermitian matrix with a reproducible phase convention."""
    m = np.asarray(m, dtype=complex)
    dev = np.max(np.abs(m - m.conj().T))
    if dev > herm_tol:
        raise ValidationError(f"hermitian_eig: input deviates from Hermitian by {dev:.3e}")
    w, v = np.linalg.eigh(m)
    v = v.copy()
    for k in range(v.shape[1]):
        col = v[:, k]
        idx = np.argmax(np.abs(col) > 1e-12)
        piv = col[idx]
        if abs(piv) > 0:
            v[:, k] = col * (piv.conjugate() / abs(piv))
    return SpectralDecomposition(w, v)


def psd_sqrt(rho: np.ndarray, psd_tol: float = PSD_TOL) -> np.ndarray:
    """Principal square root of a positive semidefinite Hermitian matrix."""
    dec = hermitian_eig(np.asarray(rho, dtype=complex))
    w = dec.eigenvalues
    if w[0] < -psd_tol:
        raise ValidationError(f"psd_sqrt: negative eigenvalue {w[0]:.3e}")
    s = np.sqrt(np.maximum(w, 0.0))
    v = dec.eigenvectors
    return (v * s) @ v.conj().T


def pinv_sqrt(rho: np.ndarray, eps: float, psd_tol: float = PSD_TOL) -> np.ndarray:
    """Support pseudo-inverse square root: eigenvalues >= eps map to 1/sqrt,
    smaller ones to 0."""
    dec = hermitian_eig(np.asarray(rho, dtype=complex))
    w = dec.eigenvalues
    if w[0] < -psd_tol:
        raise ValidationError(f"pinv_sqrt: negative eigenvalue {w[0]:.3e}")
    keep = w >= eps
    s = np.where(keep, 1.0 / np.sqrt(np.where(keep, w, 1.0)), 0.0)
    v = dec.eigenvectors
    return (v * s) @ v.conj().T


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(sigma) rho sqrt(sigma)))^2."""
    rho = density_matrix(rho)
    sigma = density_matrix(sigma)
    check_density(rho)
    check_density(sigma)
    s = psd_sqrt(sigma)
    w = np.linalg.eigvalsh(s @ rho @ s)
    val = float(np.sum(np.sqrt(np.maximum(w, 0.0))) ** 2)
    return max(val, 0.0)


def trace_distance(rho, sigma) -> float:
    """Tr|rho - sigma| / 2."""
    rho = density_matrix(rho)
    sigma = density_matrix(sigma)
    check_density(rho)
    check_density(sigma)
    w = np.linalg.eigvalsh(rho - sigma)
    return float(0.5 * np.sum(np.abs(w)))


def partial_trace_cavity(rho: np.ndarray, n_max: int) -> np.ndarray:
    """Trace out the cavity mode of a state on atom (x) cavity, returning the
    2x2 reduced atom state."""
    rho = np.asarray(rho, dtype=complex)
    nc = n_max + 1
    if rho.shape != (2 * nc, 2 * nc):
        raise ValidationError(
            f"partial_trace_cavity: expected shape {(2 * nc, 2 * nc)}, got {rho.shape}")
    blocks = rho.reshape(2, nc, 2, nc)
    return np.einsum("injn->ij", blocks)


def reduced_atom_states(states: np.ndarray, n_max: int) -> np.ndarray:
    """Vectorized partial trace over the cavity for a stack of states."""
    states = np.asarray(states, dtype=complex)
    nc = n_max + 1
    blocks = states.reshape(-1, 2, nc, 2, nc)
    return np.einsum("tinjn->tij", blocks)


def purity(rho: np.ndarray) -> float:
    rho = np.asarray(rho)
    return float(np.real(np.trace(rho @ rho)))
