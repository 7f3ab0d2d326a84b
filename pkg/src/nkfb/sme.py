"""Stochastic-master-equation steppers used to cross-check the operational engine.

Homodyne detection (phase ``theta``, efficiency ``eta``, channel ``c = L e^{i theta}``):

* Stratonovich: ``d rho = L rho + sqrt(eta) y H[c] rho - (eta/2) A2[c] rho``,
  integrated with Heun's predictor-corrector.
* Ito: ``d rho = L rho dt + sqrt(eta) xi H[c] rho dt``.

No-knowledge feedback with delay (``theta = pi/2``, ``eta = 1``, Hermitian ``L``),
net noise ``delta = xi_now - xi_delayed``:

* Stratonovich: ``d rho = -i[H - delta L, rho]``.
* Ito: ``d rho = -i[H, rho] dt + 2 D[L] rho dt + i delta [L, rho] dt``.

Ito steps default to ``scheme="kraus"``: the first-order Ito expansion written
as ``K rho K^dag`` (``K = 1 - iH dt + c y dt - c^dag c dt / 2`` for homodyne
records, ``K = 1 - iH dt + i delta L dt - L^2 dt`` once feedback is active).
Expanding it with ``(xi dt)^2 -> dt`` reproduces the equations above, and unlike
the additive Euler-Maruyama update (``scheme="euler"``) it keeps pure states on
the Bloch sphere. The additive update overshoots positivity by ``O(gamma dt)``
on most steps for pure states.

Zero delay is not handled here: with ``tau = 0`` the two noises coincide and
the delayed equations do not apply. Use the operational engine instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import ConfigError
from .quantum import (
    ValidationError,
    check_hermitian,
    commutator,
    dag,
    dissipator,
    lindblad_rhs,
    superop_A2,
    superop_H,
    trace,
)

# Eigenvalues in [-REPAIR_TOL, 0) are clipped; anything lower is a step failure.
REPAIR_TOL = 1e-2


class StepFailure(RuntimeError):
    """The state left the physical set by more than the repair tolerance."""


@dataclass(frozen=True, eq=False)
class HomodyneConfig:
    H: np.ndarray
    L: np.ndarray
    theta: float = np.pi / 2
    eta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "H", check_hermitian(self.H, name="H"))
        L = np.asarray(self.L, dtype=complex)
        if L.shape != self.H.shape:
            raise ValidationError("H and L must have the same shape")
        object.__setattr__(self, "L", L)
        if not 0 < self.eta <= 1:
            raise ValidationError("eta must lie in (0, 1]")
        if not 0 <= self.theta < 2 * np.pi:
            raise ValidationError("theta must lie in [0, 2 pi)")

    @property
    def c(self) -> np.ndarray:
        return self.L * np.exp(1j * self.theta)


def repair(rho, tol: float = REPAIR_TOL):
    """Hermitize, clip small negative eigenvalues, and renormalize the trace.

    Works on a single matrix or a stack. Raises ``StepFailure`` if any
    eigenvalue is below ``-tol`` or the state is not finite.
    """
    rho = 0.5 * (rho + dag(rho))
    if not np.all(np.isfinite(rho)):
        raise StepFailure("state is not finite")
    tr = trace(rho).real
    if np.any(tr <= 0):
        raise StepFailure("state trace is not positive")
    rho = rho / tr[..., None, None]
    w, v = np.linalg.eigh(rho)
    lo = w.min()
    if lo < -tol:
        raise StepFailure(f"eigenvalue {lo:.3g} below -{tol:g}; reduce dt")
    if lo < 0:
        w = np.clip(w, 0.0, None)
        rho = (v * w[..., None, :]) @ dag(v)
        rho = rho / trace(rho).real[..., None, None]
    return rho


def homodyne_record(rho, cfg: HomodyneConfig, xi: float):
    c = cfg.c
    return np.sqrt(cfg.eta) * trace((c + dag(c)) @ rho).real + xi


def ito_homodyne_increment(rho, cfg: HomodyneConfig, xi, dt):
    """Euler-Maruyama increment ``L rho dt + sqrt(eta) xi H[c] rho dt``."""
    xi = np.asarray(xi, dtype=float)[..., None, None]
    return lindblad_rhs(cfg.H, cfg.c, rho) * dt + np.sqrt(cfg.eta) * xi * superop_H(cfg.c, rho) * dt


def ito_homodyne_step(rho, cfg: HomodyneConfig, xi, dt, scheme="kraus", tol=REPAIR_TOL):
    if not dt > 0:
        raise ValueError("dt must be positive")
    if scheme == "euler":
        return repair(rho + ito_homodyne_increment(rho, cfg, xi, dt), tol)
    if scheme != "kraus":
        raise ValueError(f"unknown scheme {scheme!r}")
    c = cfg.c
    d = rho.shape[-1]
    y = np.asarray(homodyne_record(rho, cfg, xi))[..., None, None]
    K = np.eye(d) - 1j * cfg.H * dt - 0.5 * (dag(c) @ c) * dt + np.sqrt(cfg.eta) * y * c * dt
    new = K @ rho @ dag(K) + (1.0 - cfg.eta) * (c @ rho @ dag(c)) * dt
    return repair(new, tol)


def stratonovich_homodyne_drift(rho, cfg: HomodyneConfig, y):
    y = np.asarray(y, dtype=float)[..., None, None]
    c = cfg.c
    return (
        lindblad_rhs(cfg.H, c, rho)
        + np.sqrt(cfg.eta) * y * superop_H(c, rho)
        - 0.5 * cfg.eta * superop_A2(c, rho)
    )


def stratonovich_homodyne_step(rho, cfg: HomodyneConfig, y, dt, tol=REPAIR_TOL):
    """Heun step with the record ``y`` held fixed across the step."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    k1 = stratonovich_homodyne_drift(rho, cfg, y)
    k2 = stratonovich_homodyne_drift(rho + k1 * dt, cfg, y)
    return repair(rho + 0.5 * (k1 + k2) * dt, tol)


def _net_noise(xi_now, xi_delayed, feedback_active):
    xi_now = np.asarray(xi_now, dtype=float)
    if feedback_active:
        return xi_now - np.asarray(xi_delayed, dtype=float)
    return xi_now


def delayed_ito_increment(rho, xi_now, xi_delayed, H, L, dt, feedback_active):
    """Additive Euler-Maruyama increment of the delayed (or bare) Ito SME."""
    delta = _net_noise(xi_now, xi_delayed, feedback_active)[..., None, None]
    lindblad = 2.0 * dissipator(L, rho) if feedback_active else dissipator(L, rho)
    return (-1j * commutator(H, rho) + lindblad + 1j * delta * commutator(L, rho)) * dt


def delayed_ito_step(rho, xi_now, xi_delayed, H, L, dt, feedback_active, scheme="kraus", tol=REPAIR_TOL):
    """One Ito step of the delayed-feedback SME (no-feedback form before ``tau``)."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if scheme == "euler":
        return repair(rho + delayed_ito_increment(rho, xi_now, xi_delayed, H, L, dt, feedback_active), tol)
    if scheme != "kraus":
        raise ValueError(f"unknown scheme {scheme!r}")
    delta = _net_noise(xi_now, xi_delayed, feedback_active)[..., None, None]
    d = rho.shape[-1]
    LL = L @ L
    damp = 1.0 if feedback_active else 0.5
    K = np.eye(d) - 1j * H * dt + 1j * delta * L * dt - damp * LL * dt
    return repair(K @ rho @ dag(K), tol)


def delayed_stratonovich_drift(rho, xi_now, xi_delayed, H, L, feedback_active):
    delta = _net_noise(xi_now, xi_delayed, feedback_active)[..., None, None]
    return -1j * (commutator(H, rho) - delta * commutator(L, rho))


def delayed_stratonovich_step(rho, xi_now, xi_delayed, H, L, dt, feedback_active, tol=REPAIR_TOL):
    """Heun step of ``d rho = -i[H - delta L, rho]``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    k1 = delayed_stratonovich_drift(rho, xi_now, xi_delayed, H, L, feedback_active)
    k2 = delayed_stratonovich_drift(rho + k1 * dt, xi_now, xi_delayed, H, L, feedback_active)
    return repair(rho + 0.5 * (k1 + k2) * dt, tol)


def run_sme_trajectory(method, cfg, rho0, noise, record_every=1, scheme="kraus"):
    """Single trajectory with the ``"ito"`` or ``"stratonovich"`` delayed SME.

    ``cfg`` is a ``StepConfig``. Returns the recorded states, one every
    ``record_every`` steps, starting with ``rho0``.
    """
    from .engine import _record
    from .noise import DelayBuffer

    if cfg.feedback_enabled and cfg.kappa == 0:
        raise ConfigError("SME integrators need tau > 0 with feedback; use method=operational")
    H, L, dt = cfg.H, cfg.L, cfg.dt
    rho = np.asarray(rho0, dtype=complex)
    buf = DelayBuffer(cfg.kappa)
    states = [rho]
    for j, xi in enumerate(np.asarray(noise, dtype=float)):
        xi_d = buf.push_pop(xi)
        active = cfg.feedback_enabled and xi_d is not None
        xd = xi_d if active else 0.0
        if method == "ito":
            rho = delayed_ito_step(rho, xi, xd, H, L, dt, active, scheme=scheme)
        elif method == "stratonovich":
            rho = delayed_stratonovich_step(rho, xi, xd, H, L, dt, active)
        else:
            raise ValueError(f"unknown method {method!r}")
        if (j + 1) % record_every == 0:
            states.append(rho)
    return _record(states, dt * record_every, None)
