"""Vectorized qubit kernels for ensembles.

A batch of trajectories is held as three real arrays ``(x, y, z)`` (Bloch
components). Every update is elementwise, so trajectory ``i`` gives
bit-identical output whatever batch it is computed in; this is what makes
ensemble results independent of the worker count.

The maps are the same as the single-trajectory functions in ``engine`` and
``sme`` (tests check agreement to 1e-12):

* ``operational``: rotations about the coupling axis for the measurement and
  feedback kicks, and a fixed rotation for ``U``.
* ``stratonovich``: Heun on ``dS/dt = 2 (h - delta l) x S``.
* ``ito``: ``K rho K^dag`` normalized, as in ``sme.delayed_ito_step``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .noise import BatchDelayLine, _generator
from .quantum import ValidationError, dag, pauli_components
from .sme import REPAIR_TOL, StepFailure

METHODS = ("operational", "ito", "stratonovich")
NOISE_BLOCK = 1024


class TrajectoryError(RuntimeError):
    def __init__(self, stream_index, message):
        super().__init__(f"trajectory {stream_index}: {message}")
        self.stream_index = stream_index


def rotation_matrix(axis, angle) -> np.ndarray:
    n = np.asarray(axis, dtype=float)
    K = np.array([[0, -n[2], n[1]], [n[2], 0, -n[0]], [-n[1], n[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * (K @ K)


@dataclass(frozen=True)
class QubitModel:
    """Vector parts of ``H`` and ``L`` plus precomputed step constants."""

    h: np.ndarray
    l: np.ndarray
    H: np.ndarray
    L: np.ndarray
    dt: float

    @classmethod
    def from_operators(cls, H, L, dt):
        H = np.asarray(H, dtype=complex)
        L = np.asarray(L, dtype=complex)
        if H.shape != (2, 2):
            raise ValidationError("batched kernels support qubits only")
        return cls(pauli_components(H)[1], pauli_components(L)[1], H, L, float(dt))

    @property
    def lnorm(self) -> float:
        return float(np.sqrt(self.l @ self.l))

    @property
    def axis(self) -> np.ndarray:
        n = self.lnorm
        return self.l / n if n > 0 else np.array([0.0, 0.0, 1.0])

    @property
    def u_rotation(self) -> np.ndarray:
        hn = float(np.sqrt(self.h @ self.h))
        if hn == 0:
            return np.eye(3)
        return rotation_matrix(self.h / hn, 2 * hn * self.dt)


def _rotate(S, n, angle):
    """Rotate Bloch vectors ``S`` about fixed unit ``n`` by per-trajectory ``angle``."""
    x, y, z = S
    c = np.cos(angle)
    s = np.sin(angle)
    if n[0] == 0 and n[1] == 0:
        sign = np.sign(n[2])
        s = s * sign
        return (x * c - y * s, x * s + y * c, z)
    nx, ny, nz = n
    ndot = (nx * x + ny * y + nz * z) * (1 - c)
    return (
        x * c + (ny * z - nz * y) * s + nx * ndot,
        y * c + (nz * x - nx * z) * s + ny * ndot,
        z * c + (nx * y - ny * x) * s + nz * ndot,
    )


def _apply_matrix(S, R):
    x, y, z = S
    return (
        R[0, 0] * x + R[0, 1] * y + R[0, 2] * z,
        R[1, 0] * x + R[1, 1] * y + R[1, 2] * z,
        R[2, 0] * x + R[2, 1] * y + R[2, 2] * z,
    )


def _cross(w, S):
    wx, wy, wz = w
    x, y, z = S
    return (wy * z - wz * y, wz * x - wx * z, wx * y - wy * x)


def _check_ball(S, tol, indices):
    x, y, z = S
    r = np.sqrt(x * x + y * y + z * z)
    bad = ~np.isfinite(r) | (r > 1 + 2 * tol)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise TrajectoryError(int(indices[i]), StepFailure(f"Bloch length {r[i]:.6g} beyond repair"))
    over = r > 1
    if np.any(over):
        scale = np.where(over, 1 / np.where(over, r, 1), 1.0)
        return (x * scale, y * scale, z * scale)
    return S


class _Stepper:
    def __init__(self, method, model: QubitModel, tol=REPAIR_TOL):
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}")
        self.method = method
        self.m = model
        self.tol = tol
        self.n = model.axis
        self.kick = 2 * model.lnorm * model.dt
        self.R = model.u_rotation
        dt = model.dt
        LL = model.L @ model.L
        eye = np.eye(2)
        # Kraus pieces: K = K0 + delta * K1
        self.K0_off = eye - 1j * model.H * dt - 0.5 * LL * dt
        self.K0_on = eye - 1j * model.H * dt - LL * dt
        self.K1 = 1j * model.L * dt

    def __call__(self, S, xi, xd, indices):
        if self.method == "operational":
            S = _rotate(S, self.n, -self.kick * xi)
            S = _apply_matrix(S, self.R)
            if xd is not None:
                S = _rotate(S, self.n, self.kick * xd)
            return S
        delta = xi if xd is None else xi - xd
        if self.method == "stratonovich":
            dt = self.m.dt
            w = tuple(2 * self.m.h[k] - 2 * delta * self.m.l[k] for k in range(3))
            k1 = _cross(w, S)
            Sbar = tuple(S[k] + dt * k1[k] for k in range(3))
            k2 = _cross(w, Sbar)
            S = tuple(S[k] + 0.5 * dt * (k1[k] + k2[k]) for k in range(3))
            return _check_ball(S, self.tol, indices)
        K0 = self.K0_off if xd is None else self.K0_on
        return _check_ball(_kraus(S, K0, self.K1, delta), self.tol, indices)


def _kraus(S, K0, K1, delta):
    x, y, z = S
    a = 0.5 * (1 + z)
    d = 0.5 * (1 - z)
    c = 0.5 * (x - 1j * y)
    cb = np.conj(c)
    k00 = K0[0, 0] + delta * K1[0, 0]
    k01 = K0[0, 1] + delta * K1[0, 1]
    k10 = K0[1, 0] + delta * K1[1, 0]
    k11 = K0[1, 1] + delta * K1[1, 1]
    t00 = k00 * a + k01 * cb
    t01 = k00 * c + k01 * d
    t10 = k10 * a + k11 * cb
    t11 = k10 * c + k11 * d
    r00 = (t00 * np.conj(k00) + t01 * np.conj(k01)).real
    r01 = t00 * np.conj(k10) + t01 * np.conj(k11)
    r11 = (t10 * np.conj(k10) + t11 * np.conj(k11)).real
    tr = r00 + r11
    return (2 * r01.real / tr, -2 * r01.imag / tr, (r00 - r11) / tr)


def simulate_batch(
    method,
    model: QubitModel,
    bloch0,
    stream_indices,
    master_seed,
    n_steps,
    record_every=1,
    kappa=0,
    feedback=True,
    noise=None,
):
    """Run a batch of trajectories; returns Bloch samples of shape ``(B, n_rec, 3)``.

    Noise comes from the per-trajectory streams unless an explicit array of
    shape ``(B, n_steps)`` is passed.
    """
    idx = np.asarray(stream_indices, dtype=np.int64)
    B = len(idx)
    if method != "operational" and feedback and kappa == 0:
        raise ValueError("SME methods need kappa >= 1 with feedback; use operational")
    step = _Stepper(method, model)
    gens = None if noise is not None else [_generator(master_seed, int(i)) for i in idx]
    sqrt_dt = np.sqrt(model.dt)
    b0 = np.asarray(bloch0, dtype=float)
    S = tuple(np.full(B, b0[k]) for k in range(3))
    n_rec = n_steps // record_every + 1
    out = np.empty((B, n_rec, 3))
    out[:, 0, :] = b0
    delay = BatchDelayLine(kappa, B)
    rec = 1
    for start in range(0, n_steps, NOISE_BLOCK):
        stop = min(start + NOISE_BLOCK, n_steps)
        if gens is None:
            block = np.asarray(noise[:, start:stop], dtype=float)
        else:
            block = np.empty((B, stop - start))
            for b, g in enumerate(gens):
                block[b] = g.standard_normal(stop - start)
            block /= sqrt_dt
        for j in range(stop - start):
            xi = np.ascontiguousarray(block[:, j])
            xd = delay.push_pop(xi)
            S = step(S, xi, xd if feedback else None, idx)
            if (start + j + 1) % record_every == 0:
                out[:, rec, 0], out[:, rec, 1], out[:, rec, 2] = S
                rec += 1
    return out


def bloch_density(S):
    """Density matrices for a ``(..., 3)`` array of Bloch vectors (no validation)."""
    S = np.asarray(S)
    rho = np.empty(S.shape[:-1] + (2, 2), dtype=complex)
    rho[..., 0, 0] = 0.5 * (1 + S[..., 2])
    rho[..., 1, 1] = 0.5 * (1 - S[..., 2])
    rho[..., 0, 1] = 0.5 * (S[..., 0] - 1j * S[..., 1])
    rho[..., 1, 0] = dag(rho)[..., 1, 0]
    return rho
