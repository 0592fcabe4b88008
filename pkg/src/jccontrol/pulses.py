"""Control-field specifications, jittered realizations, and sampling.

A PulseSpec describes the nominal field; a PulseRealization is one concrete
draw of the jitter (amplitude multipliers per period, shifted square-wave
edges, phase offset for the smooth wave). Realizations are immutable and a
run samples one realization throughout.

Square-wave edges are quantized to the integration step grid when one is
supplied, so that every discontinuity of c(t) falls on a step boundary and
the fixed-step integrator sees an exactly piecewise-constant coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

KINDS = ("none", "square", "sine_squared")


@dataclass(frozen=True)
class PulseSpec:
    """Nominal control field c(t).

    square:       c = amplitude on the second half of each period tau_c
    sine_squared: c = amplitude * sin^2(omega_p t)
    jitter_fraction perturbs amplitudes and edge positions / phase by up to
    that fraction; one realization is drawn per run from (seed, run index).
    """

    kind: str = "none"
    amplitude: float = 0.0
    tau_c: float | None = None
    omega_p: float | None = None
    jitter_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"pulse kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "square" and not (self.tau_c and self.tau_c > 0):
            raise ValidationError("square pulse needs tau_c > 0")
        if self.kind == "sine_squared" and not (self.omega_p and self.omega_p > 0):
            raise ValidationError("sine_squared pulse needs omega_p > 0")
        if not 0.0 <= self.jitter_fraction < 1.0:
            raise ValidationError(
                f"jitter_fraction must lie in [0, 1), got {self.jitter_fraction}")

    @property
    def period(self) -> float | None:
        """Nominal period of c(t); sin^2 repeats every pi / omega_p."""
        if self.kind == "square":
            return self.tau_c
        if self.kind == "sine_squared":
            return math.pi / self.omega_p
        return None


@dataclass(frozen=True)
class PulseRealization:
    """One concrete draw of a control field over [0, horizon]."""

    kind: str
    horizon: float
    # square: breakpoints and the value on each interval (len(edges) + 1)
    edges: np.ndarray = field(default_factory=lambda: np.empty(0))
    values: np.ndarray = field(default_factory=lambda: np.zeros(1))
    # sine_squared: per-period amplitudes on the shifted period grid
    amps: np.ndarray = field(default_factory=lambda: np.empty(0))
    omega_p: float = 0.0
    phase_shift: float = 0.0
    period_offset: int = 0

    @property
    def piecewise_constant(self) -> bool:
        return self.kind in ("none", "square")

    def value(self, t):
        """c(t); right-continuous at square-wave edges. Accepts arrays."""
        t = np.asarray(t, dtype=float)
        if self.kind == "none":
            out = np.zeros_like(t)
        elif self.kind == "square":
            idx = np.searchsorted(self.edges, t, side="right")
            out = self.values[idx]
        else:
            tp = math.pi / self.omega_p
            k = np.floor((t - self.phase_shift) / tp).astype(int) - self.period_offset
            k = np.clip(k, 0, len(self.amps) - 1)
            out = self.amps[k] * np.sin(self.omega_p * (t - self.phase_shift)) ** 2
        return out if out.ndim else float(out)


def realize(spec: PulseSpec, horizon: float, seed: int | None = None,
            run_index: int = 0, edge_grid: float | None = None) -> PulseRealization:
    """Draw one realization of the pulse over [0, horizon].

    The generator stream is fixed by (seed, run_index); per period the draws
    are amplitude multiplier, then (square only) rising and falling edge
    shifts. For sine_squared a single phase offset is drawn first.
    """
    if seed is None:
        seed = spec.seed
    j = spec.jitter_fraction
    if spec.kind == "none":
        return PulseRealization(kind="none", horizon=horizon)

    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(run_index,)))

    if spec.kind == "square":
        tau = spec.tau_c
        n_per = int(math.ceil(horizon / tau)) + 1
        ks = np.arange(n_per)
        if j > 0:
            # edge shifts scale with the half-period (the ON/OFF segment
            # width); scaling with the full period degrades the averaged
            # fidelity below its contracted floor
            amps = spec.amplitude * rng.uniform(1 - j, 1 + j, n_per)
            rises = (ks + 0.5) * tau + rng.uniform(-j, j, n_per) * (tau / 2)
            falls = (ks + 1.0) * tau + rng.uniform(-j, j, n_per) * (tau / 2)
            if edge_grid is not None:
                rises = np.round(rises / edge_grid) * edge_grid
                falls = np.round(falls / edge_grid) * edge_grid
        else:
            amps = np.full(n_per, spec.amplitude)
            rises = (ks + 0.5) * tau
            falls = (ks + 1.0) * tau
        edges = np.empty(2 * n_per)
        edges[0::2] = rises
        edges[1::2] = falls
        if np.any(np.diff(edges) <= 0):
            raise ValidationError("square-wave edges collided; jitter too large for tau_c")
        values = np.zeros(2 * n_per + 1)
        values[1::2] = amps
        return PulseRealization(kind="square", horizon=horizon, edges=edges, values=values)

    tp = math.pi / spec.omega_p
    phase = rng.uniform(-j, j) * (2 * math.pi / spec.omega_p) if j > 0 else 0.0
    k0 = int(math.floor((0.0 - phase) / tp))
    k1 = int(math.floor((horizon - phase) / tp))
    n_per = k1 - k0 + 1
    if j > 0:
        amps = spec.amplitude * rng.uniform(1 - j, 1 + j, n_per)
    else:
        amps = np.full(n_per, spec.amplitude)
    return PulseRealization(kind="sine_squared", horizon=horizon, amps=amps,
                            omega_p=spec.omega_p, phase_shift=phase, period_offset=k0)


def sample_pulse(spec: PulseSpec, t, realization: PulseRealization):
    """Evaluate the realized control field at time t."""
    if realization.kind != spec.kind:
        raise ValidationError(
            f"realization kind {realization.kind!r} does not match spec {spec.kind!r}")
    return realization.value(t)


def check_step_alignment(spec: PulseSpec, dt: float) -> None:
    """Square pulses require dt to divide tau_c / 2 so edges sit on step
    boundaries."""
    if spec.kind != "square":
        return
    ratio = spec.tau_c / 2 / dt
    if abs(ratio - round(ratio)) > 1e-9 * max(ratio, 1.0):
        raise ValidationError(
            f"dt={dt:g} must divide tau_c/2={spec.tau_c / 2:g} exactly "
            f"(ratio {ratio:.6g} is not an integer)")


def stage_values(realization: PulseRealization, n_steps: int, dt: float,
                 t0: float = 0.0) -> np.ndarray:
    """Control values at the integrator's stage times, shape (n_steps, 3).

    Piecewise-constant fields are sampled at the step midpoint for all three
    stages (exact, since edges are grid-aligned); smooth fields at the actual
    stage times (t, t + dt/2, t + dt).
    """
    t = t0 + dt * np.arange(n_steps)
    out = np.empty((n_steps, 3))
    if realization.piecewise_constant:
        mid = realization.value(t + dt / 2)
        out[:, 0] = out[:, 1] = out[:, 2] = mid
    else:
        out[:, 0] = realization.value(t)
        out[:, 1] = realization.value(t + dt / 2)
        out[:, 2] = realization.value(t + dt)
    return out
