"""Cross-validation battery: every derived quantity against its independent
oracle route.

Each check pairs a production implementation with a structurally different
computation (explicit index sums, superoperator matrices, the two-variable
grid solver, eigen-basis logarithmic derivatives, exact piecewise
propagators) and records the observed deviation against its bound. The
`validate` CLI subcommand runs the battery and exits nonzero on any failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analysis, channels, leo, ogrid, petz, states
from .model import JCParams, initial_state_vector, superposition_angle_state
from .pulses import PulseSpec

LEO_PARAMS = JCParams(omega=1.0, omega_c=1.0, kappa=0.7, lam=0.6, gamma=0.4)
PETZ_PARAMS = JCParams(omega=1.0, omega_c=1.0, kappa=0.6, lam=0.75, gamma=1.0)
SQUARE = PulseSpec(kind="square", amplitude=100.0, tau_c=0.1)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    bound: float
    detail: str = ""

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"[{mark}] {self.name}: {self.value:.3e} <= {self.bound:.3e}{extra}"


def _check(name, value, bound, detail=""):
    return CheckResult(name=name, passed=bool(value <= bound), value=float(value),
                       bound=float(bound), detail=detail)


def _random_hermitian(rng, d):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (g + g.conj().T) / 2


def check_eig_reconstruction(rng) -> list:
    m = _random_hermitian(rng, 4)
    dec = states.hermitian_eig(m)
    rec = np.max(np.abs(dec.reconstruct() - m))
    orth = np.max(np.abs(dec.eigenvectors.conj().T @ dec.eigenvectors - np.eye(4)))
    return [_check("eig.reconstruction", rec, 1e-12),
            _check("eig.orthonormal", orth, 1e-12)]


def check_psd_sqrt(rng) -> list:
    rho = channels.random_density(4, rng)
    rt = states.psd_sqrt(rho)
    return [_check("psd_sqrt.squares", np.max(np.abs(rt @ rt - rho)), 1e-10)]


def check_pinv_projector(rng) -> list:
    # rank-deficient test state
    rho = channels.random_density(4, rng, rank=2)
    eps = 1e-8
    irt = states.pinv_sqrt(rho, eps)
    proj_route = irt @ rho @ irt
    w, v = np.linalg.eigh(rho)
    proj = (v * (w >= eps).astype(float)) @ v.conj().T
    return [_check("pinv_sqrt.support_projector", np.max(np.abs(proj_route - proj)), 1e-9)]


def check_metric_formulas() -> list:
    r1 = np.diag([0.5, 0.5]).astype(complex)
    r2 = np.diag([0.9, 0.1]).astype(complex)
    fid_oracle = (math.sqrt(0.5 * 0.9) + math.sqrt(0.5 * 0.1)) ** 2
    td_oracle = 0.5 * (abs(0.5 - 0.9) + abs(0.5 - 0.1))
    return [_check("fidelity.commuting", abs(states.fidelity(r1, r2) - fid_oracle), 1e-12),
            _check("trace_distance.commuting", abs(states.trace_distance(r1, r2) - td_oracle), 1e-12)]


def check_partial_trace(rng) -> list:
    n_max = 2
    rho = channels.random_density(2 * (n_max + 1), rng)
    got = states.partial_trace_cavity(rho, n_max)
    oracle = np.zeros((2, 2), complex)
    nc = n_max + 1
    for i in range(2):
        for j in range(2):
            for n in range(nc):
                oracle[i, j] += rho[i * nc + n, j * nc + n]
    return [_check("partial_trace.double_sum", np.max(np.abs(got - oracle)), 1e-12)]


def check_lindblad_superop(rng) -> list:
    m = petz.LindbladModel.from_params(PETZ_PARAMS)
    rho = channels.random_density(m.dim, rng)
    direct = petz.lindblad_derivative(rho, m)
    s = channels.lindblad_superoperator(m)
    via_matrix = channels.superop_apply(s, rho)
    return [_check("lindblad_rhs.superoperator", np.max(np.abs(direct - via_matrix)), 1e-12),
            _check("lindblad_rhs.traceless", abs(np.trace(direct)), 1e-12)]


def check_ogrid_agreement(horizon: float) -> list:
    out = []
    for label, pulse in (("uncontrolled", None), ("square", SQUARE)):
        _, f1c, f2c = leo.solve_o_closed(LEO_PARAMS, pulse, horizon, dt=1e-4, stride=10)
        ref = ogrid.refine_o_operator_grid(LEO_PARAMS, pulse, horizon, dt_s=1e-3)
        dev = max(np.max(np.abs(ref.F1 - f1c)), np.max(np.abs(ref.F2 - f2c)))
        out.append(_check(f"ogrid.closed_vs_grid.{label}", dev, 1e-6,
                          detail=f"levels={ref.levels}, converged={ref.converged}"))
    return out


def check_reversal_generator_assembly(rng) -> list:
    m = petz.LindbladModel.from_params(PETZ_PARAMS)
    rho = channels.random_density(m.dim, rng)  # full rank
    gen = petz.reversal_generators(rho, m)
    rt = states.psd_sqrt(rho)
    # multiplication oracle: L_r rho^{1/2} must equal rho^{1/2} L^dag
    dev = max(np.max(np.abs(lr @ rt - rt @ l.conj().T))
              for lr, l in zip(gen.l_r, m.lindblads))
    herm = np.max(np.abs(gen.h_r - gen.h_r.conj().T))
    return [_check("reversal_generators.multiplication", dev, 1e-9),
            _check("reversal_generators.h_r_hermitian", herm, 1e-10)]


def check_petz_recovery(rng, n_channels: int) -> list:
    worst = 0.0
    for _ in range(n_channels):
        ch = channels.random_channel(4, n_kraus=3, rng=rng)
        rho0 = channels.random_density(4, rng)
        sigma = channels.kraus_apply(ch, rho0)
        rec = petz.petz_map_apply(rho0, ch, sigma)
        worst = max(worst, float(np.max(np.abs(rec - rho0))))
    return [_check("petz.reference_recovery", worst, 1e-10,
                   detail=f"{n_channels} random channels")]


def check_kraus_vs_reversal(tau: float, dt: float) -> list:
    m = petz.LindbladModel.from_params(PETZ_PARAMS)
    psi0 = initial_state_vector("plus", PETZ_PARAMS.n_max)
    fwd = petz.forward_propagate(psi0, m, tau, dt)
    ks = channels.step_channel_kraus(m, dt)
    comp = channels.kraus_completeness_defect(ks)
    bwd = petz.reverse_propagate(fwd, m)
    x = np.asarray(fwd.states[-1]).copy()
    worst = 0.0
    n = fwd.n_steps
    for k in range(n - 1, -1, -1):
        x = petz.petz_map_apply(fwd.states[k], ks, x)
        dev = 0.5 * np.sum(np.abs(np.linalg.eigvalsh(x - bwd.states[n - k])))
        worst = max(worst, float(dev))
    return [_check("petz.kraus_completeness", comp, 1e-10),
            _check("petz.kraus_vs_reversal_me", worst, 5 * dt)]


def check_fisher_vs_sld(rng, n_samples: int = 20) -> list:
    worst = 0.0
    for _ in range(n_samples):
        r = rng.uniform(-1, 1, 3)
        r *= rng.uniform(0.05, 0.95) / np.linalg.norm(r)
        dr = rng.uniform(-1, 1, 3)
        rho = analysis.bloch_to_density(r)
        drho = 0.5 * (dr[0] * analysis._PAULIS[0] + dr[1] * analysis._PAULIS[1]
                      + dr[2] * analysis._PAULIS[2])
        worst = max(worst, abs(analysis.fisher_information_bloch(r, dr)
                               - analysis.sld_fisher(rho, drho)))
    return [_check("fisher.bloch_vs_sld", worst, 1e-9, detail=f"{n_samples} samples")]


def check_fisher_vs_analytic(tau: float, thetas=(math.pi / 4, math.pi / 6)) -> list:
    m = petz.LindbladModel.from_params(PETZ_PARAMS)
    out = []
    for th in thetas:
        ft = analysis.fisher_information_trajectory(m, tau, 1e-3, theta=th)
        gabs = np.abs(analysis.decay_amplitude(ft.times, PETZ_PARAMS.lam, PETZ_PARAMS.kappa))
        dev = np.max(np.abs(ft.forward - 4 * gabs ** 2))
        out.append(_check(f"fisher.vs_4g2.theta={th:.4f}", dev, 1e-3))
    return out


def check_analytic_reduced(tau: float, dt: float = 1e-3) -> list:
    m = petz.LindbladModel.from_params(PETZ_PARAMS)
    psi0 = initial_state_vector("plus", PETZ_PARAMS.n_max)
    fwd = petz.forward_propagate(psi0, m, tau, dt)
    red = states.reduced_atom_states(np.asarray(fwd.states), PETZ_PARAMS.n_max)
    ts = fwd.times
    g = analysis.decay_amplitude(ts, PETZ_PARAMS.lam, PETZ_PARAMS.kappa)
    pop_err = np.max(np.abs(red[:, 1, 1].real - 0.5 * np.abs(g) ** 2))
    coh_err = np.max(np.abs(red[:, 1, 0] - 0.5 * g * np.exp(-1j * PETZ_PARAMS.omega * ts)))
    return [_check("analytic.population", pop_err, 1e-4),
            _check("analytic.coherence", coh_err, 1e-4)]


def check_uncontrolled_gap(horizon: float = 10.0) -> list:
    psi0 = initial_state_vector("plus", LEO_PARAMS.n_max)
    t_sq = leo.propagate_leo(psi0, LEO_PARAMS, SQUARE, horizon)
    t_un = leo.propagate_leo(psi0, LEO_PARAMS, None, horizon)
    f_sq = leo.fidelity_vs_ideal(t_sq).min()
    f_un = leo.fidelity_vs_ideal(t_un).min()
    return [_check("leo.uncontrolled_gap", f_un, f_sq - 0.1,
                   detail=f"controlled min {f_sq:.4f}, uncontrolled min {f_un:.4f}")]


def check_support_cutoff_sweep(tau: float = 10.0, dt: float = 1e-3) -> list:
    m = petz.LindbladModel.from_params(PETZ_PARAMS)
    psi0 = initial_state_vector("plus", PETZ_PARAMS.n_max)
    fwd = petz.forward_propagate(psi0, m, tau, dt)
    errs = []
    for eps in (1e-8, 1e-12):
        bwd = petz.reverse_propagate(fwd, m, epsilon=eps)
        diff = np.asarray(bwd.states) - np.asarray(fwd.states)[::-1]
        errs.append(float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum(axis=1).max()))
    ratio = max(errs) / max(min(errs), 1e-300)
    return [_check("petz.cutoff_sweep_ratio", ratio, 10.0,
                   detail=f"err(1e-8)={errs[0]:.2e}, err(1e-12)={errs[1]:.2e}")]


def check_dt_halving(horizon: float = 10.0) -> list:
    psi0 = initial_state_vector("plus", LEO_PARAMS.n_max)
    fids = []
    for dt in (1e-4, 5e-5):
        traj = leo.propagate_leo(psi0, LEO_PARAMS, SQUARE, horizon, dt=dt)
        fids.append(leo.fidelity_vs_ideal(traj)[-1])
    return [_check("leo.dt_halving_final_fidelity", abs(fids[0] - fids[1]), 1e-8)]


def run_validation(quick: bool = False, seed: int = 20240 + 101) -> list:
    """Run the full battery; quick mode shortens horizons and sample counts."""
    rng = np.random.default_rng(seed)
    results = []
    results += check_eig_reconstruction(rng)
    results += check_psd_sqrt(rng)
    results += check_pinv_projector(rng)
    results += check_metric_formulas()
    results += check_partial_trace(rng)
    results += check_lindblad_superop(rng)
    results += check_reversal_generator_assembly(rng)
    results += check_fisher_vs_sld(rng, n_samples=5 if quick else 20)
    results += check_petz_recovery(rng, n_channels=5 if quick else 20)
    results += check_kraus_vs_reversal(tau=0.5 if quick else 1.0, dt=1e-2)
    results += check_analytic_reduced(tau=2.0 if quick else 10.0)
    results += check_fisher_vs_analytic(tau=2.0 if quick else 10.0)
    results += check_ogrid_agreement(horizon=2.0 if quick else 10.0)
    results += check_uncontrolled_gap(horizon=10.0)
    if not quick:
        results += check_support_cutoff_sweep()
        results += check_dt_halving()
    return results
