"""Qubit trajectories under no-knowledge measurement with delayed feedback."""

__version__ = "0.1.0"

from .engine import ConfigError, StepConfig, run_trajectory, run_trajectory_from_noise
from .ensemble import EnsembleResult, EnsembleTask, run_ensemble, validate_against_oracle
from .noise import DelayBuffer, NoiseStream
from .oracles import OracleCurve, commuting_average, frozen_average, lindblad_propagate, steady_fidelity

__all__ = [
    "ConfigError",
    "DelayBuffer",
    "EnsembleResult",
    "EnsembleTask",
    "NoiseStream",
    "OracleCurve",
    "StepConfig",
    "commuting_average",
    "frozen_average",
    "lindblad_propagate",
    "run_ensemble",
    "run_trajectory",
    "run_trajectory_from_noise",
    "steady_fidelity",
    "validate_against_oracle",
]
