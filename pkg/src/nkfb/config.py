"""Experiment configuration files (TOML).

Example::

    [system]
    omega = 6.283185307179586   # rad / time, so T_omega = 1
    rabi_axis = "x"             # x | y | z | none
    gamma = 0.5                 # 1 / time

    [sim]
    tau = 1.0
    method = "operational"      # operational | ito | stratonovich

    [ensemble]
    n_traj = 5000

Every key is optional. ``sim.dt`` defaults to ``1e-3 * T_omega`` (or
``1e-3 / gamma`` without a drive) and ``sim.t_final`` to ``5 * T_omega`` (or
``3 / gamma``).
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from .engine import DELAY_REL_TOL, StepConfig
from .engine import ConfigError as _EngineConfigError
from .quantum import bloch_to_density, dephasing_operator, rabi_hamiltonian

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

METHODS = ("operational", "ito", "stratonovich")
AXES = ("x", "y", "z", "none")
FORMATS = ("csv", "json")


class ConfigError(_EngineConfigError):
    """One or more field-level problems; ``errors`` lists them with field paths."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class SystemConfig:
    omega: float = 2 * math.pi
    rabi_axis: str = "x"
    gamma: float = 0.5


@dataclass
class SimConfig:
    dt: float | None = None
    t_final: float | None = None
    tau: float = 0.0
    method: str = "operational"
    feedback: bool = True


@dataclass
class EnsembleConfig:
    n_traj: int = 5000
    master_seed: int = 12345
    workers: int | None = None


@dataclass
class InitialStateConfig:
    bloch: tuple = (1 / math.sqrt(2), 1 / math.sqrt(2), 0.0)


@dataclass
class OutputConfig:
    dir: str = "out"
    format: str = "csv"
    record_every: int = 10


SECTIONS = {
    "system": SystemConfig,
    "sim": SimConfig,
    "ensemble": EnsembleConfig,
    "initial_state": InitialStateConfig,
    "output": OutputConfig,
}


@dataclass
class ExperimentConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    initial_state: InitialStateConfig = field(default_factory=InitialStateConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @property
    def T_omega(self) -> float:
        return 2 * math.pi / self.system.omega if self.has_drive else math.inf

    @property
    def T_gamma(self) -> float:
        return 1 / self.system.gamma if self.system.gamma > 0 else math.inf

    @property
    def has_drive(self) -> bool:
        return self.system.omega != 0 and self.system.rabi_axis != "none"

    @property
    def kappa(self) -> int:
        return round(self.sim.tau / self.sim.dt)

    @property
    def n_steps(self) -> int:
        return max(1, round(self.sim.t_final / self.sim.dt))

    def hamiltonian(self):
        if not self.has_drive:
            return np.zeros((2, 2), dtype=complex)
        return rabi_hamiltonian(self.system.omega, self.system.rabi_axis)

    def coupling(self):
        return dephasing_operator(self.system.gamma)

    def rho0(self):
        return bloch_to_density(np.asarray(self.initial_state.bloch, dtype=float))

    def step_config(self) -> StepConfig:
        return StepConfig(self.hamiltonian(), self.coupling(), self.sim.dt, self.kappa, self.sim.feedback)

    def params(self) -> dict:
        """Physical parameters recorded in manifests."""
        return {
            "omega": self.system.omega,
            "rabi_axis": self.system.rabi_axis,
            "gamma": self.system.gamma,
            "T_omega": self.T_omega if self.has_drive else None,
            "T_gamma": self.T_gamma if self.system.gamma > 0 else None,
            "dt": self.sim.dt,
            "t_final": self.sim.t_final,
            "tau": self.sim.tau,
            "kappa": self.kappa,
            "n_steps": self.n_steps,
            "method": self.sim.method,
            "feedback": self.sim.feedback,
            "initial_bloch": list(self.initial_state.bloch),
            "record_every": self.output.record_every,
        }


def _parse_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply ``section.key=value`` strings (values parsed as TOML literals)."""
    raw = {k: dict(v) if isinstance(v, dict) else v for k, v in raw.items()}
    for item in overrides or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError([f"override {item!r} is not key=value"])
        section, dot, name = key.strip().partition(".")
        if not dot:
            raise ConfigError([f"override key {key!r} must look like section.key"])
        raw.setdefault(section, {})[name] = _parse_value(value.strip())
    return raw


def _build_section(name, cls, data, errors):
    if not isinstance(data, dict):
        errors.append(f"{name}: expected a table")
        return cls()
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            errors.append(f"{name}.{key}: unknown key")
    return cls(**{k: v for k, v in data.items() if k in known})


def _number(errors, path, value, positive=False, nonneg=False, integer=False):
    ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    if integer:
        ok = isinstance(value, int) and not isinstance(value, bool)
    if not ok or not math.isfinite(value):
        errors.append(f"{path}: expected a finite {'integer' if integer else 'number'}, got {value!r}")
        return False
    if positive and value <= 0:
        errors.append(f"{path}: must be > 0")
        return False
    if nonneg and value < 0:
        errors.append(f"{path}: must be >= 0")
        return False
    return True


def build_config(raw: dict) -> ExperimentConfig:
    errors: list[str] = []
    for key in raw:
        if key not in SECTIONS:
            errors.append(f"{key}: unknown section")
    parts = {name: _build_section(name, cls, raw.get(name, {}), errors) for name, cls in SECTIONS.items()}
    cfg = ExperimentConfig(**parts)
    s, sim, ens, out = cfg.system, cfg.sim, cfg.ensemble, cfg.output

    _number(errors, "system.omega", s.omega, nonneg=True)
    if s.rabi_axis not in AXES:
        errors.append(f"system.rabi_axis: must be one of {AXES}")
    _number(errors, "system.gamma", s.gamma, nonneg=True)
    if sim.method not in METHODS:
        errors.append(f"sim.method: must be one of {METHODS}")
    if not isinstance(sim.feedback, bool):
        errors.append("sim.feedback: expected true or false")
    if errors:
        raise ConfigError(errors)

    scale = cfg.T_omega if cfg.has_drive else (cfg.T_gamma if s.gamma > 0 else 1.0)
    if sim.dt is None:
        sim.dt = 1e-3 * scale
    if sim.t_final is None:
        sim.t_final = 5 * scale if cfg.has_drive else 3 * scale
    dt_ok = _number(errors, "sim.dt", sim.dt, positive=True)
    _number(errors, "sim.t_final", sim.t_final, positive=True)
    tau_ok = _number(errors, "sim.tau", sim.tau, nonneg=True)
    if dt_ok and tau_ok:
        kappa = round(sim.tau / sim.dt)
        if abs(kappa * sim.dt - sim.tau) > DELAY_REL_TOL * sim.tau:
            errors.append(f"sim.tau: tau not an integer multiple of dt (tau={sim.tau!r}, dt={sim.dt!r})")
        elif kappa == 0 and sim.feedback and sim.method in ("ito", "stratonovich"):
            errors.append(
                f"sim.method: method={sim.method} is invalid with tau=0 (the delayed SMEs assume "
                "independent noises); use method=operational"
            )

    _number(errors, "ensemble.n_traj", ens.n_traj, positive=True, integer=True)
    _number(errors, "ensemble.master_seed", ens.master_seed, nonneg=True, integer=True)
    if ens.workers is not None:
        _number(errors, "ensemble.workers", ens.workers, positive=True, integer=True)

    b = cfg.initial_state.bloch
    try:
        b = tuple(float(v) for v in b)
        if len(b) != 3:
            raise ValueError
        if math.fsum(v * v for v in b) > 1 + 1e-10:
            errors.append("initial_state.bloch: vector lies outside the Bloch ball")
        cfg.initial_state.bloch = b
    except (TypeError, ValueError):
        errors.append("initial_state.bloch: expected three numbers")

    if out.format not in FORMATS:
        errors.append(f"output.format: must be one of {FORMATS}")
    _number(errors, "output.record_every", out.record_every, positive=True, integer=True)
    if not isinstance(out.dir, str):
        errors.append("output.dir: expected a path string")
    if errors:
        raise ConfigError(errors)
    return cfg


def parse_config(text: str, overrides=()) -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"syntax: {exc}"]) from None
    return build_config(apply_overrides(raw, overrides))


def load_config(path, overrides=()) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), overrides)
