"""Dense complex linear algebra for small open quantum systems.

Density matrices and operators are plain ``numpy`` arrays of shape ``(d, d)``.
The superoperators below also accept stacked arrays of shape ``(..., d, d)``
and act on the last two axes, which is what the homodyne ensemble tests use.

Conventions
-----------
* ``unitary_from_generator(G, a)`` returns ``exp(-i a G)``.
* Qubit basis: ``|0> = (1, 0)`` has ``Sz = +1``; ``SIGMA_MINUS = |1><0|``.
"""

from __future__ import annotations

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
BLOCH_TOL = 1e-10

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)


class ValidationError(ValueError):
    """An operator or state violates its invariants."""


def dag(a):
    return np.conj(np.swapaxes(a, -1, -2))


def trace(a):
    return np.trace(a, axis1=-2, axis2=-1)


def _check_square(a, name="operator"):
    a = np.asarray(a, dtype=complex)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValidationError(f"{name} must be square, got shape {a.shape}")
    return a


def _check_same_dim(*arrays):
    dims = {a.shape[-1] for a in arrays}
    if len(dims) != 1:
        raise ValidationError(f"dimension mismatch: {sorted(dims)}")


def check_hermitian(a, tol=HERMITIAN_TOL, name="operator"):
    """Return ``a`` as a complex array, raising if it is not Hermitian."""
    a = _check_square(a, name)
    err = np.max(np.abs(a - dag(a))) if a.size else 0.0
    if err > tol:
        raise ValidationError(f"{name} is not Hermitian (max |A - A^dag| = {err:.3g})")
    return a


def check_density(rho, psd_tol=PSD_TOL, trace_tol=1e-10):
    """Validate a single density matrix and return it as a complex array."""
    rho = check_hermitian(rho, name="density matrix")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > trace_tol:
        raise ValidationError(f"density matrix trace is {tr!r}, expected 1")
    lo = np.linalg.eigvalsh(rho).min()
    if lo < -psd_tol:
        raise ValidationError(f"density matrix has eigenvalue {lo:.3g} < 0")
    return rho


def normalize(rho):
    """Hermitize and rescale to unit trace (works on stacks)."""
    rho = 0.5 * (rho + dag(rho))
    return rho / trace(rho).real[..., None, None]


def purity(rho) -> float:
    return float(np.real(np.trace(rho @ rho)))


def unitary_from_generator(G, angle: float):
    """Return ``exp(-i * angle * G)`` for Hermitian ``G``.

    Qubits use the closed-form Pauli rotation; larger dimensions use the
    Hermitian eigendecomposition of ``G``.
    """
    G = check_hermitian(G, name="generator")
    if G.ndim != 2:
        raise ValidationError("generator must be a single (d, d) matrix")
    d = G.shape[0]
    if d == 2:
        g0, g = pauli_components(G)
        norm = float(np.sqrt(g @ g))
        phase = np.exp(-1j * angle * g0)
        if norm == 0.0:
            return phase * IDENTITY
        n = g / norm
        ndots = n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z
        theta = angle * norm
        return phase * (np.cos(theta) * IDENTITY - 1j * np.sin(theta) * ndots)
    w, v = np.linalg.eigh(G)
    return (v * np.exp(-1j * angle * w)) @ dag(v)


def pauli_components(A):
    """Split a 2x2 Hermitian matrix as ``a0 * I + a . sigma``; returns (a0, a)."""
    A = np.asarray(A, dtype=complex)
    a0 = 0.5 * np.trace(A).real
    a = np.array([0.5 * np.trace(A @ s).real for s in PAULIS])
    return a0, a


def commutator(A, B):
    return A @ B - B @ A


def commutator_norm(A, B) -> float:
    """Frobenius norm of ``AB - BA``."""
    A = _check_square(A)
    B = _check_square(B)
    _check_same_dim(A, B)
    return float(np.linalg.norm(commutator(A, B)))


def dissipator(L, rho):
    """``L rho L^dag - (L^dag L rho + rho L^dag L) / 2``."""
    L = _check_square(L)
    rho = _check_square(rho, "state")
    _check_same_dim(L, rho)
    LdL = dag(L) @ L
    return L @ rho @ dag(L) - 0.5 * (LdL @ rho + rho @ LdL)


def lindblad_rhs(H, L, rho):
    """Right-hand side of the single-channel Lindblad master equation."""
    H = _check_square(H)
    rho = _check_square(rho, "state")
    _check_same_dim(H, L, rho)
    return -1j * commutator(H, rho) + dissipator(L, rho)


def _abar(c, rho):
    return c @ rho + rho @ dag(c)


def superop_H(c, rho):
    """Measurement-backaction superoperator ``c rho + rho c^dag - Tr(...) rho``."""
    c = _check_square(c)
    rho = _check_square(rho, "state")
    _check_same_dim(c, rho)
    a = _abar(c, rho)
    return a - trace(a)[..., None, None] * rho


def superop_A2(c, rho):
    """Twice-applied ``Abar[c]`` with its trace removed along ``rho``.

    For Hermitian ``L`` and ``c = iL`` one half of this equals ``D[c] rho``.
    """
    c = _check_square(c)
    rho = _check_square(rho, "state")
    _check_same_dim(c, rho)
    a2 = _abar(c, _abar(c, rho))
    return a2 - trace(a2)[..., None, None] * rho


def density_to_bloch(rho):
    """Bloch vector ``(Sx, Sy, Sz)`` of a qubit state (or stack of states)."""
    rho = np.asarray(rho)
    if rho.shape[-2:] != (2, 2):
        raise ValidationError(f"Bloch vectors need d=2, got shape {rho.shape}")
    sx = 2.0 * rho[..., 0, 1].real
    sy = -2.0 * rho[..., 0, 1].imag
    sz = (rho[..., 0, 0] - rho[..., 1, 1]).real
    return np.stack([sx, sy, sz], axis=-1)


def bloch_to_density(b):
    b = np.asarray(b, dtype=float)
    if b.shape[-1] != 3:
        raise ValidationError("Bloch vector must have 3 components")
    if np.any(np.linalg.norm(b, axis=-1) > 1.0 + BLOCH_TOL):
        raise ValidationError(f"Bloch vector outside the unit ball: {b}")
    rho = np.empty(b.shape[:-1] + (2, 2), dtype=complex)
    rho[..., 0, 0] = 0.5 * (1.0 + b[..., 2])
    rho[..., 1, 1] = 0.5 * (1.0 - b[..., 2])
    rho[..., 0, 1] = 0.5 * (b[..., 0] - 1j * b[..., 1])
    rho[..., 1, 0] = 0.5 * (b[..., 0] + 1j * b[..., 1])
    return rho


def rabi_hamiltonian(omega: float, axis) -> np.ndarray:
    """``(omega / 2) * (n . sigma)`` for a unit axis or one of ``'x'``, ``'y'``, ``'z'``."""
    n = axis_vector(axis)
    return 0.5 * omega * (n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z)


def axis_vector(axis) -> np.ndarray:
    if isinstance(axis, str):
        try:
            return np.eye(3)["xyz".index(axis.lower())]
        except ValueError:
            raise ValidationError(f"unknown rotation axis {axis!r}") from None
    n = np.asarray(axis, dtype=float)
    if n.shape != (3,) or abs(np.linalg.norm(n) - 1.0) > 1e-12:
        raise ValidationError(f"rotation axis must be a unit 3-vector, got {axis!r}")
    return n


def dephasing_operator(gamma: float) -> np.ndarray:
    """Coupling ``sqrt(gamma) * sigma_z``; transverse Bloch decay rate is ``2 gamma``."""
    return np.sqrt(gamma) * SIGMA_Z
