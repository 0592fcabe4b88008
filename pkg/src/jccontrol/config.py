"""Scenario configuration: JSON loading, defaults, and validation.

One config drives one scenario run. All quantities are in the dimensionless
units of the model (atom frequency of order 1). Every run is fully
determined by the config including its seed; no environment state is
consulted.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, ValidationError
from .model import JCParams
from .pulses import PulseSpec, check_step_alignment

SCENARIOS = ("leo-fidelity", "leo-onorm", "petz-forward", "petz-reverse",
             "petz-rotated", "fisher", "validate")

_LEO_SCENARIOS = ("leo-fidelity", "leo-onorm")
_PETZ_SCENARIOS = ("petz-forward", "petz-reverse", "petz-rotated", "fisher")

_PARAM_KEYS = {"omega", "omega_c", "lambda", "kappa", "gamma", "omega0", "n_max"}
_PULSE_KEYS = {"kind", "amplitude", "tau_c", "omega_p", "jitter_fraction", "seed"}
_TOP_KEYS = {"scenario", "params", "pulse", "initial_state", "T", "tau", "dt",
             "n_runs", "seed", "theta", "delta_theta", "epsilon", "stride",
             "slope_tol", "output_dir"}


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    params: JCParams
    pulse: PulseSpec | None
    initial_state: object = "plus"
    total_time: float = 10.0
    dt: float = 1e-4
    n_runs: int = 50
    seed: int = 1
    theta: float = math.pi / 4
    delta_theta: float = 1e-5
    epsilon: float = 1e-10
    stride: int = 10
    slope_tol: float = 1e-6
    output_dir: str = "out"


def default_config(scenario: str) -> dict:
    """Default JSON document for a scenario."""
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {SCENARIOS}",
                          key="scenario")
    if scenario in _LEO_SCENARIOS:
        doc = {
            "scenario": scenario,
            "params": {"omega": 1.0, "omega_c": 1.0, "lambda": 0.6, "kappa": 0.7,
                       "gamma": 0.4, "omega0": 0.0, "n_max": 1},
            "pulse": {"kind": "square", "amplitude": 100.0, "tau_c": 0.1,
                      "jitter_fraction": 0.05 if scenario == "leo-fidelity" else 0.0,
                      "seed": 1},
            "initial_state": "plus",
            "T": 10.0,
            "dt": 1e-4,
            "n_runs": 50,
            "seed": 1,
            "stride": 10,
            "output_dir": "out",
        }
    elif scenario in _PETZ_SCENARIOS:
        doc = {
            "scenario": scenario,
            "params": {"omega": 1.0, "omega_c": 1.0, "lambda": 0.75, "kappa": 0.6,
                       "gamma": 1.0, "omega0": 0.0, "n_max": 1},
            "initial_state": "plus",
            "tau": 10.0,
            "dt": 1e-3,
            "seed": 1,
            "epsilon": 1e-10,
            "stride": 10,
            "slope_tol": 1e-6,
            "output_dir": "out",
        }
        if scenario == "fisher":
            doc["theta"] = math.pi / 4
            doc["delta_theta"] = 1e-5
    else:
        doc = {"scenario": "validate", "output_dir": "out", "seed": 1}
    return doc


def _check_keys(given: dict, allowed: set, prefix: str = ""):
    for k in given:
        if k not in allowed:
            raise ConfigError(f"unknown key (allowed: {sorted(allowed)})",
                              key=f"{prefix}{k}")


def _build_params(doc: dict) -> JCParams:
    _check_keys(doc, _PARAM_KEYS, "params.")
    kw = dict(doc)
    if "lambda" in kw:
        kw["lam"] = kw.pop("lambda")
    try:
        return JCParams(**kw)
    except (ValidationError, TypeError) as e:
        raise ConfigError(str(e), key="params") from e


def _build_pulse(doc: dict) -> PulseSpec:
    _check_keys(doc, _PULSE_KEYS, "pulse.")
    try:
        return PulseSpec(**doc)
    except (ValidationError, TypeError) as e:
        raise ConfigError(str(e), key="pulse") from e


def config_from_dict(doc: dict) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    if "scenario" not in doc:
        raise ConfigError("missing required key", key="scenario")
    scenario = doc["scenario"]
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {SCENARIOS}",
                          key="scenario")
    _check_keys(doc, _TOP_KEYS)
    merged = default_config(scenario)
    for k, v in doc.items():
        if k in ("params", "pulse") and isinstance(v, dict):
            merged[k] = {**merged.get(k, {}), **v}
        else:
            merged[k] = v

    if "T" in doc and "tau" in doc:
        raise ConfigError("give either T or tau, not both", key="T")
    if "tau" in doc:
        total_time = doc["tau"]
    elif "T" in doc:
        total_time = doc["T"]
    else:
        total_time = merged.get("tau", merged.get("T", 10.0))
    merged.pop("tau", None)
    merged.pop("T", None)

    params = _build_params(merged.get("params", default_config("leo-fidelity")["params"]))
    pulse = None
    if scenario in _LEO_SCENARIOS:
        if "pulse" not in merged or merged["pulse"] is None:
            raise ConfigError("LEO scenarios require a pulse", key="pulse")
        pulse = _build_pulse(merged["pulse"])
    elif merged.get("pulse"):
        raise ConfigError(f"scenario {scenario} takes no pulse", key="pulse")

    cfg = ScenarioConfig(
        scenario=scenario,
        params=params,
        pulse=pulse,
        initial_state=merged.get("initial_state", "plus"),
        total_time=float(total_time),
        dt=float(merged.get("dt", 1e-4 if scenario in _LEO_SCENARIOS else 1e-3)),
        n_runs=int(merged.get("n_runs", 50)),
        seed=int(merged.get("seed", 1)),
        theta=float(merged.get("theta", math.pi / 4)),
        delta_theta=float(merged.get("delta_theta", 1e-5)),
        epsilon=float(merged.get("epsilon", 1e-10)),
        stride=int(merged.get("stride", 10)),
        slope_tol=float(merged.get("slope_tol", 1e-6)),
        output_dir=str(merged.get("output_dir", "out")),
    )
    _validate_config(cfg)
    return cfg


def _validate_config(cfg: ScenarioConfig):
    if cfg.total_time <= 0:
        raise ConfigError("total time must be > 0", key="T")
    if cfg.dt <= 0:
        raise ConfigError("dt must be > 0", key="dt")
    if cfg.n_runs < 1:
        raise ConfigError("n_runs must be >= 1", key="n_runs")
    if cfg.stride < 1:
        raise ConfigError("stride must be >= 1", key="stride")
    n_steps = round(cfg.total_time / cfg.dt)
    if abs(n_steps * cfg.dt - cfg.total_time) > 1e-9 * max(cfg.total_time, 1.0):
        raise ConfigError("total time must be an integer number of dt steps", key="dt")
    if n_steps % cfg.stride != 0:
        raise ConfigError("stride must divide the step count", key="stride")
    if cfg.pulse is not None:
        try:
            check_step_alignment(cfg.pulse, cfg.dt)
        except ValidationError as e:
            raise ConfigError(str(e), key="pulse.tau_c") from e
    if not 0 < cfg.epsilon < 1:
        raise ConfigError("epsilon must lie in (0, 1)", key="epsilon")


def load_config(path) -> ScenarioConfig:
    """Load and fully validate a JSON scenario config."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    text = p.read_text()
    if not text.strip():
        raise ConfigError(f"config file is empty: {p}")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON in {p}: {e}") from e
    return config_from_dict(doc)
