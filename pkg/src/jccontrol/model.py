"""Operators of the dissipative Jaynes-Cummings model and its leakage control.

The full Hilbert space is atom (x) cavity with the cavity truncated at n_max
photons. Conventions: atom basis [g, e] with <sigma_z> = +1 for |e>, cavity
Fock basis |0..n_max>, and the flattened ordering of ``states``:
index = atom * (n_max + 1) + photons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# atom operators in the [g, e] basis, excited state at +1
SIGMA_Z = np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, 1.0j], [-1.0j, 0.0]], dtype=complex)
SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |g><e|
SIGMA_PLUS = SIGMA_MINUS.conj().T


@dataclass(frozen=True)
class JCParams:
    """Physical constants of the atom-cavity-bath model.

    omega     atom frequency
    omega_c   cavity frequency
    kappa     atom-cavity coupling
    lam       system-bath coupling strength (collapse operator is lam * a)
    gamma     bath memory rate; the memory kernel is
              (gamma/2) exp(-i omega0 (t-s) - gamma |t-s|)
    omega0    bath central frequency shift
    n_max     cavity photon truncation
    """

    omega: float
    omega_c: float
    kappa: float
    lam: float
    gamma: float
    omega0: float = 0.0
    n_max: int = 1

    def __post_init__(self):
        for name in ("omega", "omega_c", "kappa", "lam", "gamma", "omega0"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v)):
                raise ValidationError(f"JCParams.{name} must be finite, got {v!r}")
        if self.gamma <= 0:
            raise ValidationError(f"JCParams.gamma must be > 0, got {self.gamma}")
        if not isinstance(self.n_max, int) or self.n_max < 1:
            raise ValidationError(f"JCParams.n_max must be an integer >= 1, got {self.n_max}")

    @property
    def gamma_eff(self) -> complex:
        return self.gamma + 1j * self.omega0

    @property
    def dim(self) -> int:
        return 2 * (self.n_max + 1)


def state_index(atom: int, photons: int, n_max: int) -> int:
    """Flattened basis index of |atom, photons>."""
    if atom not in (0, 1) or not 0 <= photons <= n_max:
        raise ValidationError(f"no basis state (atom={atom}, n={photons}) for n_max={n_max}")
    return atom * (n_max + 1) + photons


def build_annihilation(n_max: int) -> np.ndarray:
    """Cavity annihilation operator, <n-1|a|n> = sqrt(n)."""
    return np.diag(np.sqrt(np.arange(1, n_max + 1)), 1).astype(complex)


def build_system_hamiltonian(p: JCParams) -> np.ndarray:
    """H_s = omega/2 sigma_z + kappa (sigma- a^dag + sigma+ a) + omega_c a^dag a."""
    a = build_annihilation(p.n_max)
    ic = np.eye(p.n_max + 1, dtype=complex)
    h = (p.omega / 2) * np.kron(SIGMA_Z, ic)
    h += p.kappa * (np.kron(SIGMA_MINUS, a.conj().T) + np.kron(SIGMA_PLUS, a))
    h += p.omega_c * np.kron(np.eye(2, dtype=complex), a.conj().T @ a)
    return h


def build_lindblad(p: JCParams) -> np.ndarray:
    """Collapse operator lam * a on the full space (identity on the atom)."""
    return p.lam * np.kron(np.eye(2, dtype=complex), build_annihilation(p.n_max))


def leo_diagonal(n_max: int) -> np.ndarray:
    """Diagonal of the leakage-elimination operator R = P - Q, where P projects
    onto the zero-photon subspace {|g0>, |e0>}."""
    cav = np.full(n_max + 1, -1.0)
    cav[0] = 1.0
    return np.concatenate([cav, cav])


def build_leo_operator(n_max: int) -> np.ndarray:
    """R = P - Q as a matrix; R^2 = I and [R, P] = 0 by construction."""
    return np.diag(leo_diagonal(n_max)).astype(complex)


def excitation_number(n_max: int) -> np.ndarray:
    """sigma+ sigma- + a^dag a, conserved by the coupled Hamiltonian."""
    a = build_annihilation(n_max)
    ic = np.eye(n_max + 1, dtype=complex)
    return np.kron(SIGMA_PLUS @ SIGMA_MINUS, ic) + np.kron(np.eye(2, dtype=complex), a.conj().T @ a)


# named initial-state presets on the full space
_PRESETS = ("plus", "minus", "g0", "e0")


def initial_state_vector(spec, n_max: int) -> np.ndarray:
    """Resolve a named preset or an explicit amplitude list to a normalized
    state vector on the full space."""
    dim = 2 * (n_max + 1)
    if isinstance(spec, str):
        psi = np.zeros(dim, dtype=complex)
        ig0 = state_index(0, 0, n_max)
        ie0 = state_index(1, 0, n_max)
        if spec == "plus":
            psi[ig0] = psi[ie0] = 1.0
        elif spec == "minus":
            psi[ig0], psi[ie0] = 1.0, -1.0
        elif spec == "g0":
            psi[ig0] = 1.0
        elif spec == "e0":
            psi[ie0] = 1.0
        else:
            raise ValidationError(
                f"unknown initial state preset {spec!r}; choose from {_PRESETS} "
                "or give an explicit amplitude list")
        return psi / np.linalg.norm(psi)
    amps = np.asarray(
        [complex(x[0], x[1]) if isinstance(x, (list, tuple)) else complex(x) for x in spec])
    if amps.shape != (dim,):
        raise ValidationError(f"initial state needs {dim} amplitudes, got {len(amps)}")
    n = np.linalg.norm(amps)
    if n == 0:
        raise ValidationError("initial state amplitudes are all zero")
    return amps / n


def superposition_angle_state(theta: float, n_max: int) -> np.ndarray:
    """cos(theta)|g0> + sin(theta)|e0>."""
    psi = np.zeros(2 * (n_max + 1), dtype=complex)
    psi[state_index(0, 0, n_max)] = np.cos(theta)
    psi[state_index(1, 0, n_max)] = np.sin(theta)
    return psi
