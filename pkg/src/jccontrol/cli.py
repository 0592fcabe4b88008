"""Scenario runner CLI.

Subcommands:
    run --config <path> [--out <dir>]   run one scenario from a JSON config
    validate [--quick]                  oracle cross-check battery
    print-defaults <scenario>           emit the default config for a scenario

Outputs land in the config's output directory as <scenario>.csv plus
<scenario>.summary.json. Runs are deterministic: identical config (and seed)
gives byte-identical files. Exit codes: 0 success, 1 validation or load
error, 2 numerical failure (the summary then carries the failing time).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analysis, leo, petz, states, validation
from .config import SCENARIOS, ScenarioConfig, default_config, load_config
from .errors import NumericalInstabilityError, ValidationError
from .model import initial_state_vector
from .pulses import PulseSpec


def _fmt(x) -> str:
    return f"{float(x):.12g}"


def write_csv(path: Path, columns: dict) -> None:
    names = list(columns)
    arrs = [np.asarray(columns[k]) for k in names]
    n = len(arrs[0])
    lines = [",".join(names)]
    for i in range(n):
        lines.append(",".join(_fmt(a[i]) for a in arrs))
    path.write_text("\n".join(lines) + "\n")


def emit_summary(results: dict) -> str:
    """Deterministic JSON rendering of scalar results."""
    return json.dumps(results, sort_keys=True, indent=2) + "\n"


def _write_outputs(cfg: ScenarioConfig, columns: dict | None, summary: dict) -> list:
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if columns is not None:
        csv_path = out_dir / f"{cfg.scenario}.csv"
        write_csv(csv_path, columns)
        written.append(csv_path)
    sum_path = out_dir / f"{cfg.scenario}.summary.json"
    sum_path.write_text(emit_summary(summary))
    written.append(sum_path)
    return written


def _square_and_sine_specs(pulse: PulseSpec):
    """Ideal square and sine-squared companions with the configured amplitude
    and common period."""
    if pulse.kind == "square":
        tau_c = pulse.tau_c
    elif pulse.kind == "sine_squared":
        tau_c = np.pi / pulse.omega_p
    else:
        raise ValidationError("leo scenarios need a square or sine_squared pulse")
    omega_p = np.pi / tau_c
    sq = PulseSpec(kind="square", amplitude=pulse.amplitude, tau_c=tau_c)
    s2 = PulseSpec(kind="sine_squared", amplitude=pulse.amplitude, omega_p=omega_p)
    return sq, s2


def _phi0(psi0, params):
    from .model import state_index
    return (psi0[state_index(0, 0, params.n_max)], psi0[state_index(1, 0, params.n_max)])


def run_leo_fidelity(cfg: ScenarioConfig):
    p = cfg.params
    psi0 = initial_state_vector(cfg.initial_state, p.n_max)
    phi0 = _phi0(psi0, p)
    sq, s2 = _square_and_sine_specs(cfg.pulse)
    kw = dict(dt=cfg.dt, stride=cfg.stride)
    traj_sq = leo.propagate_leo(psi0, p, sq, cfg.total_time, **kw)
    traj_s2 = leo.propagate_leo(psi0, p, s2, cfg.total_time, **kw)
    traj_un = leo.propagate_leo(psi0, p, None, cfg.total_time, **kw)
    fid_sq = leo.fidelity_vs_ideal(traj_sq, p, phi0)
    fid_s2 = leo.fidelity_vs_ideal(traj_s2, p, phi0)
    fid_un = leo.fidelity_vs_ideal(traj_un, p, phi0)
    noisy_spec = replace(cfg.pulse, jitter_fraction=cfg.pulse.jitter_fraction or 0.05)
    bands = leo.run_noisy_ensemble(noisy_spec, p, cfg.n_runs, cfg.total_time,
                                   dt=cfg.dt, seed=cfg.seed, stride=cfg.stride,
                                   rho0=psi0, phi0=phi0)
    columns = {
        "time": traj_sq.times,
        "fidelity_ideal_square": fid_sq,
        "fidelity_ideal_sine2": fid_s2,
        "fidelity_noisy_mean": bands.mean,
        "fidelity_noisy_min": bands.low,
        "fidelity_noisy_max": bands.high,
        "fidelity_uncontrolled": fid_un,
    }
    fid_configured = fid_sq if cfg.pulse.kind == "square" else fid_s2
    summary = {
        "min_fidelity_controlled": float(fid_configured.min()),
        "min_fidelity_controlled_square": float(fid_sq.min()),
        "min_fidelity_controlled_sine2": float(fid_s2.min()),
        "min_fidelity_uncontrolled": float(fid_un.min()),
        "mean_fidelity_noisy": float(bands.mean.mean()),
        "min_noisy_band": float(bands.low.min()),
        "n_runs": bands.n_runs,
    }
    return columns, summary


def run_leo_onorm(cfg: ScenarioConfig):
    p = cfg.params
    psi0 = initial_state_vector(cfg.initial_state, p.n_max)
    kw = dict(dt=cfg.dt, stride=cfg.stride, seed=cfg.seed)
    traj_c = leo.propagate_leo(psi0, p, cfg.pulse, cfg.total_time, **kw)
    traj_u = leo.propagate_leo(psi0, p, None, cfg.total_time, **kw)
    n1c, n2c = leo.o_norm_series(traj_c)
    n1u, n2u = leo.o_norm_series(traj_u)
    columns = {
        "time": traj_c.times,
        "abs_f1_controlled": n1c,
        "abs_f2_controlled": n2c,
        "abs_f1_uncontrolled": n1u,
        "abs_f2_uncontrolled": n2u,
        "abs_gkernel_controlled": np.abs(leo.g_kernel_series(traj_c, p)),
        "abs_gkernel_uncontrolled": np.abs(leo.g_kernel_series(traj_u, p)),
    }
    summary = {
        "peak_abs_f1_controlled": float(n1c.max()),
        "peak_abs_f2_controlled": float(n2c.max()),
        "peak_abs_f1_uncontrolled": float(n1u.max()),
        "peak_abs_f2_uncontrolled": float(n2u.max()),
        "suppression_ratio_f1": float(n1u.max() / n1c.max()),
        "suppression_ratio_f2": float(n2u.max() / n2c.max()),
    }
    return columns, summary


def _analytic_reference(cfg: ScenarioConfig, psi0):
    from .model import state_index
    p = cfg.params
    ig0 = state_index(0, 0, p.n_max)
    ie0 = state_index(1, 0, p.n_max)
    support = np.zeros(p.dim, dtype=bool)
    support[[ig0, ie0]] = True
    if np.any(np.abs(psi0[~support]) > 1e-12):
        return None
    return psi0[ie0], psi0[ig0]


def run_petz_forward(cfg: ScenarioConfig):
    p = cfg.params
    m = petz.LindbladModel.from_params(p)
    psi0 = initial_state_vector(cfg.initial_state, p.n_max)
    fwd = petz.forward_propagate(psi0, m, cfg.total_time, cfg.dt)
    s = cfg.stride
    sts = np.asarray(fwd.states)[::s]
    ts = fwd.times[::s]
    bl = analysis.bloch_series(sts, p.n_max)
    red = states.reduced_atom_states(sts, p.n_max)
    gabs = np.abs(analysis.decay_amplitude(ts, p.lam, p.kappa))
    columns = {
        "time": ts,
        "sx": bl[:, 0], "sy": bl[:, 1], "sz": bl[:, 2],
        "pop_e": red[:, 1, 1].real,
        "coh_eg_re": red[:, 1, 0].real,
        "coh_eg_im": red[:, 1, 0].imag,
        "purity": [states.purity(x) for x in sts],
        "d_optimal": gabs,
    }
    summary = {"final_purity": states.purity(sts[-1])}
    ref = _analytic_reference(cfg, psi0)
    if ref is not None:
        ce, cg = ref
        g = analysis.decay_amplitude(ts, p.lam, p.kappa)
        pop_err = np.max(np.abs(red[:, 1, 1].real - np.abs(g) ** 2 * abs(ce) ** 2))
        coh_err = np.max(np.abs(red[:, 1, 0] - g * np.exp(-1j * p.omega * ts) * ce * np.conj(cg)))
        summary["max_err_pop_vs_analytic"] = float(pop_err)
        summary["max_err_coh_vs_analytic"] = float(coh_err)
    return columns, summary


def run_petz_reverse(cfg: ScenarioConfig):
    p = cfg.params
    m = petz.LindbladModel.from_params(p)
    psi0 = initial_state_vector(cfg.initial_state, p.n_max)
    fwd = petz.forward_propagate(psi0, m, cfg.total_time, cfg.dt)
    bwd = petz.reverse_propagate(fwd, m, epsilon=cfg.epsilon)
    n = fwd.n_steps
    s = cfg.stride
    fwd_states = np.asarray(fwd.states)
    bwd_states = np.asarray(bwd.states)
    ts = fwd.times[::s]
    bl_f = analysis.bloch_series(fwd_states[::s], p.n_max)
    bl_b = analysis.bloch_series(bwd_states[::-1][::s], p.n_max)  # re-indexed to tau - t'
    ft = analysis.fisher_information_trajectory(
        m, cfg.total_time, cfg.dt, theta=cfg.theta, delta_theta=cfg.delta_theta,
        n_max=p.n_max)
    d_full = np.abs(analysis.decay_amplitude(fwd.times, p.lam, p.kappa))
    intervals = analysis.noncontractive_intervals(d_full, cfg.dt, cfg.slope_tol)
    flag = np.zeros(len(ts))
    for t0, t1 in intervals:
        flag[(ts >= t0) & (ts <= t1)] = 1.0
    columns = {
        "time": ts,
        "sx_fwd": bl_f[:, 0], "sy_fwd": bl_f[:, 1], "sz_fwd": bl_f[:, 2],
        "sx_bwd": bl_b[:, 0], "sy_bwd": bl_b[:, 1], "sz_bwd": bl_b[:, 2],
        "fisher": ft.forward[::s],
        "D_optimal": d_full[::s],
        "noncontractive_flag": flag,
    }
    diff = bwd_states - fwd_states[::-1]
    td = 0.5 * np.abs(np.linalg.eigvalsh(diff)).sum(axis=1)
    summary = {
        "max_reversal_trace_distance": float(td.max()),
        "final_recovery_fidelity": states.fidelity(bwd_states[-1], fwd_states[0]),
        "max_support_leak": float(bwd.max_support_leak),
    }
    return columns, summary


def run_petz_rotated(cfg: ScenarioConfig):
    p = cfg.params
    m = petz.LindbladModel.from_params(p)
    psi0 = initial_state_vector(cfg.initial_state, p.n_max)
    fwd = petz.forward_propagate(psi0, m, cfg.total_time, cfg.dt)
    bwd = petz.reverse_propagate(fwd, m, epsilon=cfg.epsilon)
    rot = petz.rotated_reversal(fwd, m, epsilon=cfg.epsilon, backward=bwd)
    s = cfg.stride
    beta = np.asarray(rot.states)[::s]
    ts = rot.times[::s]
    bl = analysis.bloch_series(beta, p.n_max)
    w, v = np.linalg.eigh(m.h)
    u_tau = (v * np.exp(-1j * w * cfg.total_time)) @ v.conj().T
    target = u_tau @ np.asarray(fwd.states)[0] @ u_tau.conj().T
    columns = {
        "time_reversal": ts,
        "sx_beta": bl[:, 0], "sy_beta": bl[:, 1], "sz_beta": bl[:, 2],
    }
    summary = {
        "initial_rotated_vs_forward_final": states.trace_distance(beta[0], np.asarray(fwd.states)[-1]),
        "final_rotated_trace_distance": states.trace_distance(beta[-1], target),
    }
    return columns, summary


def run_fisher(cfg: ScenarioConfig):
    p = cfg.params
    m = petz.LindbladModel.from_params(p)
    ft = analysis.fisher_information_trajectory(
        m, cfg.total_time, cfg.dt, theta=cfg.theta, delta_theta=cfg.delta_theta,
        n_max=p.n_max, include_reversal=True, epsilon=cfg.epsilon)
    ts = ft.times
    gabs = np.abs(analysis.decay_amplitude(ts, p.lam, p.kappa))
    analytic = 4 * gabs ** 2
    intervals = analysis.noncontractive_intervals(gabs, cfg.dt, cfg.slope_tol)
    s = cfg.stride
    flag = np.zeros(len(ts[::s]))
    for t0, t1 in intervals:
        flag[(ts[::s] >= t0) & (ts[::s] <= t1)] = 1.0
    columns = {
        "time": ts[::s],
        "fisher_forward": ft.forward[::s],
        "fisher_backward_mirrored": ft.backward[::-1][::s],
        "fisher_analytic": analytic[::s],
        "D_optimal": gabs[::s],
        "noncontractive_flag": flag,
    }
    mirror_err = np.max(np.abs(ft.backward[::-1] - ft.forward))
    summary = {
        "max_abs_err_vs_4g2": float(np.max(np.abs(ft.forward - analytic))),
        "nonmarkov_measure": analysis.nonmarkov_measure(gabs, cfg.dt, cfg.slope_tol),
        "max_mirror_err": float(mirror_err),
    }
    return columns, summary


def run_validate_scenario(cfg: ScenarioConfig, quick: bool = False):
    results = validation.run_validation(quick=quick, seed=cfg.seed + 20340)
    summary = {
        "all_passed": all(r.passed for r in results),
        "checks": [{"name": r.name, "passed": r.passed, "value": r.value,
                    "bound": r.bound} for r in results],
    }
    return None, summary, results


_RUNNERS = {
    "leo-fidelity": run_leo_fidelity,
    "leo-onorm": run_leo_onorm,
    "petz-forward": run_petz_forward,
    "petz-reverse": run_petz_reverse,
    "petz-rotated": run_petz_rotated,
    "fisher": run_fisher,
}


def run_scenario(cfg: ScenarioConfig, quick: bool = False) -> int:
    """Execute a scenario and write its outputs; returns the exit code."""
    try:
        if cfg.scenario == "validate":
            _, summary, results = run_validate_scenario(cfg, quick=quick)
            for r in results:
                print(r.line())
            _write_outputs(cfg, None, summary)
            return 0 if summary["all_passed"] else 1
        columns, summary = _RUNNERS[cfg.scenario](cfg)
    except NumericalInstabilityError as e:
        summary = {"status": "numerical-failure", "error": str(e),
                   "failed_at_time": e.time}
        _write_outputs(cfg, None, summary)
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    summary["status"] = "ok"
    files = _write_outputs(cfg, columns, summary)
    for f in files:
        print(f"wrote {f}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="jccontrol",
        description="Dissipative Jaynes-Cummings control scenarios")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario from a JSON config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None, help="override the output directory")

    p_val = sub.add_parser("validate", help="run the oracle cross-check battery")
    p_val.add_argument("--quick", action="store_true",
                       help="shortened horizons and sample counts")

    p_def = sub.add_parser("print-defaults", help="print a scenario's default config")
    p_def.add_argument("scenario", choices=SCENARIOS)

    args = parser.parse_args(argv)

    if args.command == "print-defaults":
        print(json.dumps(default_config(args.scenario), sort_keys=True, indent=2))
        return 0

    if args.command == "validate":
        results = validation.run_validation(quick=args.quick)
        for r in results:
            print(r.line())
        ok = all(r.passed for r in results)
        print("validation " + ("PASSED" if ok else "FAILED"))
        return 0 if ok else 1

    try:
        cfg = load_config(args.config)
    except ValidationError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    if args.out is not None:
        from dataclasses import replace as _replace
        cfg = _replace(cfg, output_dir=args.out)
    return run_scenario(cfg)


if __name__ == "__main__":
    raise SystemExit(main())
