"""Reference solutions for ensemble averages.

``lindblad_propagate`` exponentiates the vectorized Liouvillian (row-major
``vec``), so it handles any Hermitian coupling. The delayed-feedback averages
follow from counting uncancelled measurement kicks: after ``t = tau`` exactly
``kappa`` kicks remain, so the average is frozen (``H = 0``) or rotates rigidly
under ``H`` when ``[H, L] = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .engine import COMMUTE_TOL
from .quantum import (
    ValidationError,
    axis_vector,
    bloch_to_density,
    check_density,
    commutator_norm,
    dag,
    density_to_bloch,
    rabi_hamiltonian,
    unitary_from_generator,
)


@dataclass
class OracleCurve:
    times: np.ndarray
    bloch: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.bloch = np.asarray(self.bloch, dtype=float)
        if self.bloch.shape != (len(self.times), 3):
            raise ValidationError("oracle curve needs one Bloch vector per time")

    @classmethod
    def from_function(cls, fn, times, label=""):
        times = np.asarray(times, dtype=float)
        return cls(times, np.array([density_to_bloch(fn(t)) for t in times]), label)


def liouvillian(H, L) -> np.ndarray:
    """Matrix of ``rho -> -i[H, rho] + D[L] rho`` acting on row-major ``vec(rho)``."""
    H = np.asarray(H, dtype=complex)
    L = np.asarray(L, dtype=complex)
    d = H.shape[0]
    eye = np.eye(d)
    LdL = dag(L) @ L
    return (
        -1j * (np.kron(H, eye) - np.kron(eye, H.T))
        + np.kron(L, L.conj())
        - 0.5 * (np.kron(LdL, eye) + np.kron(eye, LdL.T))
    )


def lindblad_propagate(rho0, H, L, t: float):
    """``exp(Lindbladian * t) rho0``."""
    if t < 0:
        raise ValidationError("t must be non-negative")
    rho0 = np.asarray(rho0, dtype=complex)
    d = rho0.shape[0]
    out = (expm(liouvillian(H, L) * t) @ rho0.reshape(-1)).reshape(d, d)
    return 0.5 * (out + dag(out))


def frozen_plateau(rho0, L, tau: float):
    """Long-time limit of the ``H = 0`` feedback average: ``exp(D[L] tau) rho0``."""
    if tau < 0:
        raise ValidationError("tau must be non-negative")
    return lindblad_propagate(rho0, np.zeros_like(np.asarray(L, dtype=complex)), L, tau)


def frozen_average(rho0, L, tau: float, t: float):
    if t < 0 or tau < 0:
        raise ValidationError("times must be non-negative")
    return frozen_plateau(rho0, L, min(t, tau))


def commuting_average(rho0, H, L, tau: float, t: float):
    """Feedback average for ``[H, L] = 0``: Lindblad decay, then rigid rotation."""
    if commutator_norm(H, L) > COMMUTE_TOL:
        raise ValidationError("commuting_average requires [H, L] = 0")
    if t < 0 or tau < 0:
        raise ValidationError("times must be non-negative")
    if t < tau:
        return lindblad_propagate(rho0, H, L, t)
    rho_tau = lindblad_propagate(rho0, H, L, tau)
    U = unitary_from_generator(H, t - tau)
    return U @ rho_tau @ dag(U)


def steady_fidelity(sz0: float, gamma: float, tau: float) -> float:
    """Overlap of a pure initial state with its frozen plateau under ``sqrt(gamma) sigma_z``."""
    if abs(sz0) > 1 or gamma <= 0 or tau < 0:
        raise ValidationError("need |sz0| <= 1, gamma > 0, tau >= 0")
    s2 = sz0 * sz0
    return 0.5 * ((1 + s2) + (1 - s2) * np.exp(-2 * gamma * tau))


def state_fidelity_pure(rho0, rho) -> float:
    """``Tr(rho0 rho)``; equals the fidelity when ``rho0`` is pure."""
    rho0 = check_density(rho0)
    if abs(np.trace(rho0 @ rho0).real - 1) > 1e-10:
        raise ValidationError("fidelity formula is defined for pure initial states only")
    return float(np.trace(rho0 @ rho).real)


def rabi_reference(rho0, omega: float, axis, t: float):
    axis_vector(axis)
    U = unitary_from_generator(rabi_hamiltonian(omega, axis), t)
    return U @ np.asarray(rho0, dtype=complex) @ dag(U)


def dephasing_bloch(b0, gamma: float, t: float) -> np.ndarray:
    """Closed form for ``L = sqrt(gamma) sigma_z``, ``H = 0``."""
    b0 = np.asarray(b0, dtype=float)
    k = np.exp(-2 * gamma * t)
    return np.array([b0[0] * k, b0[1] * k, b0[2]])


def initial_state(bloch=(1 / np.sqrt(2), 1 / np.sqrt(2), 0.0)):
    """Default ``rho0 = (1 + (sigma_x + sigma_y)/sqrt 2) / 2``."""
    return bloch_to_density(np.asarray(bloch, dtype=float))
