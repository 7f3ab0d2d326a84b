"""Discrete-time operational evolution under no-knowledge measurement.

One time step applies, in this order, the measurement kick
``M = exp(+i xi L dt)``, the free evolution ``U = exp(-i H dt)`` and (once the
delay line has filled) the feedback kick ``F = exp(-i xi_delayed L dt)``::

    rho -> F U M rho M^dag U^dag F^dag / Tr(...)

For Hermitian ``L`` every factor is unitary, so purity is conserved up to
rounding; the state is still renormalized each step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .noise import DelayBuffer, NoiseStream
from .quantum import (
    ValidationError,
    check_density,
    check_hermitian,
    commutator_norm,
    dag,
    density_to_bloch,
    normalize,
    unitary_from_generator,
)

COMMUTE_TOL = 1e-12
DELAY_REL_TOL = 1e-9


class ConfigError(ValueError):
    pass


def delay_steps(tau: float, dt: float) -> int:
    """Number of steps ``kappa = tau / dt``; raises unless it is integral."""
    if not dt > 0:
        raise ConfigError("dt must be positive")
    if tau < 0:
        raise ConfigError("tau must be non-negative")
    kappa = round(tau / dt)
    if abs(kappa * dt - tau) > DELAY_REL_TOL * tau:
        raise ConfigError(f"tau not an integer multiple of dt (tau={tau!r}, dt={dt!r})")
    return int(kappa)


@dataclass(frozen=True, eq=False)
class StepConfig:
    H: np.ndarray
    L: np.ndarray
    dt: float
    kappa: int = 0
    feedback_enabled: bool = True

    def __post_init__(self):
        object.__setattr__(self, "H", check_hermitian(self.H, name="H"))
        object.__setattr__(self, "L", check_hermitian(self.L, name="L"))
        if self.H.shape != self.L.shape:
            raise ValidationError("H and L must have the same shape")
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if int(self.kappa) != self.kappa or self.kappa < 0:
            raise ConfigError("kappa must be a non-negative integer")
        object.__setattr__(self, "kappa", int(self.kappa))

    @classmethod
    def from_tau(cls, H, L, dt, tau=0.0, feedback_enabled=True):
        return cls(H, L, dt, delay_steps(tau, dt), feedback_enabled)

    @property
    def tau(self) -> float:
        return self.kappa * self.dt

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @cached_property
    def U(self) -> np.ndarray:
        return unitary_from_generator(self.H, self.dt)

    @cached_property
    def commuting(self) -> bool:
        return commutator_norm(self.H, self.L) <= COMMUTE_TOL


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    bloch: np.ndarray | None
    purity: np.ndarray
    seed_info: tuple | None = None
    states: np.ndarray | None = field(default=None, repr=False)


def measurement_operator(cfg: StepConfig, xi: float) -> np.ndarray:
    return unitary_from_generator(cfg.L, -xi * cfg.dt)


def feedback_operator(cfg: StepConfig, xi_delayed: float) -> np.ndarray:
    return unitary_from_generator(cfg.L, xi_delayed * cfg.dt)


def _sandwich(W, rho):
    return normalize(W @ rho @ dag(W))


def step_no_feedback(rho, xi: float, cfg: StepConfig):
    W = cfg.U @ measurement_operator(cfg, xi)
    return _sandwich(W, rho)


def step_with_feedback(rho, xi_now: float, xi_delayed: float, cfg: StepConfig):
    W = feedback_operator(cfg, xi_delayed) @ cfg.U @ measurement_operator(cfg, xi_now)
    return _sandwich(W, rho)


def run_trajectory_from_noise(cfg: StepConfig, rho0, noise, record_every: int = 1, seed_info=None):
    """Evolve ``rho0`` through the given noise samples (one per step)."""
    rho = check_density(rho0)
    noise = np.asarray(noise, dtype=float)
    n_steps = noise.shape[0]
    if n_steps < 1:
        raise ConfigError("n_steps must be >= 1")
    if record_every < 1:
        raise ConfigError("record_every must be >= 1")
    buf = DelayBuffer(cfg.kappa)
    states = [rho]
    for j, xi in enumerate(noise):
        xi_d = buf.push_pop(xi)
        if cfg.feedback_enabled and xi_d is not None:
            rho = step_with_feedback(rho, xi, xi_d, cfg)
        else:
            rho = step_no_feedback(rho, xi, cfg)
        if (j + 1) % record_every == 0:
            states.append(rho)
    return _record(states, cfg.dt * record_every, seed_info)


def run_trajectory(cfg: StepConfig, rho0, stream: NoiseStream, n_steps: int, record_every: int = 1):
    if n_steps < 1:
        raise ConfigError("n_steps must be >= 1")
    noise = stream.samples(n_steps, cfg.dt)
    return run_trajectory_from_noise(cfg, rho0, noise, record_every, stream.seed_info)


def _record(states, spacing, seed_info):
    states = np.array(states)
    times = spacing * np.arange(len(states))
    pur = np.real(np.einsum("nij,nji->n", states, states))
    bloch = density_to_bloch(states) if states.shape[-1] == 2 else None
    return TrajectoryRecord(times, bloch, pur, seed_info, states)


def compressed_commuting_propagator(noises, n: int, kappa: int, cfg: StepConfig):
    """Single unitary equal to ``n`` operational steps when ``[H, L] = 0``.

    Feedback cancels all but the last ``kappa`` measurement kicks, leaving
    ``exp(-i L dt sum_{k<n-kappa} xi_k) exp(i L dt sum_{k<n} xi_k) exp(-i H n dt)``.
    """
    if not cfg.commuting:
        raise ValidationError("H and L do not commute; no compressed propagator")
    if n < kappa:
        raise ValidationError("need n >= kappa")
    noises = np.asarray(noises, dtype=float)
    fed = noises[: n - kappa].sum()
    measured = noises[:n].sum()
    return (
        unitary_from_generator(cfg.L, fed * cfg.dt)
        @ unitary_from_generator(cfg.L, -measured * cfg.dt)
        @ unitary_from_generator(cfg.H, n * cfg.dt)
    )
