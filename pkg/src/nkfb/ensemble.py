"""Monte Carlo ensembles of qubit trajectories.

Trajectory ``i`` always uses noise stream ``(master_seed, i)``. Workers get
contiguous slices of trajectory indices, and the per-trajectory records are
reassembled in index order before reduction, so the result does not depend on
``workers``.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .engine import StepConfig
from .kernels import METHODS, QubitModel, simulate_batch
from .oracles import OracleCurve
from .quantum import ValidationError, check_density, density_to_bloch

BATCH = 1024


@dataclass(frozen=True, eq=False)
class EnsembleTask:
    """Everything needed to run one ensemble apart from the seed and size."""

    step: StepConfig
    rho0: np.ndarray
    n_steps: int
    record_every: int = 1
    method: str = "operational"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"method must be one of {METHODS}")
        if self.n_steps < 1 or self.record_every < 1:
            raise ValidationError("n_steps and record_every must be >= 1")
        if self.method != "operational" and self.step.feedback_enabled and self.step.kappa == 0:
            raise ValidationError("ito/stratonovich need tau > 0 with feedback; use operational")
        object.__setattr__(self, "rho0", check_density(self.rho0))

    @property
    def times(self) -> np.ndarray:
        n_rec = self.n_steps // self.record_every + 1
        return self.step.dt * self.record_every * np.arange(n_rec)

    def digest(self, master_seed) -> str:
        payload = {
            "H": _cplx(self.step.H),
            "L": _cplx(self.step.L),
            "dt": self.step.dt,
            "kappa": self.step.kappa,
            "feedback": self.step.feedback_enabled,
            "rho0": _cplx(self.rho0),
            "n_steps": self.n_steps,
            "record_every": self.record_every,
            "method": self.method,
            "master_seed": int(master_seed),
        }
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _cplx(a):
    a = np.asarray(a)
    return [[[float(v.real), float(v.imag)] for v in row] for row in a]


@dataclass
class EnsembleResult:
    times: np.ndarray
    mean_bloch: np.ndarray
    sem_bloch: np.ndarray
    n_traj: int
    config_digest: str
    samples: np.ndarray | None = field(default=None, repr=False)

    def to_bytes(self) -> bytes:
        return b"".join(
            np.ascontiguousarray(a).tobytes() for a in (self.times, self.mean_bloch, self.sem_bloch)
        ) + f"{self.n_traj}:{self.config_digest}".encode()


def default_workers() -> int:
    return int(os.environ.get("NKFB_WORKERS", "1"))


def _run_slice(args):
    task, master_seed, lo, hi = args
    model = QubitModel.from_operators(task.step.H, task.step.L, task.step.dt)
    b0 = density_to_bloch(task.rho0)
    parts = []
    for start in range(lo, hi, BATCH):
        idx = np.arange(start, min(start + BATCH, hi))
        parts.append(
            simulate_batch(
                task.method,
                model,
                b0,
                idx,
                master_seed,
                task.n_steps,
                task.record_every,
                task.step.kappa,
                task.step.feedback_enabled,
            )
        )
    return np.concatenate(parts, axis=0)


def reduce_samples(samples: np.ndarray):
    """Mean and standard error over axis 0 using pairwise summation."""
    n = samples.shape[0]
    # move trajectories to the contiguous last axis: numpy sums it pairwise
    by_traj = np.ascontiguousarray(np.moveaxis(samples, 0, -1))
    mean = by_traj.sum(axis=-1) / n
    if n == 1:
        return mean, np.zeros_like(mean)
    dev = by_traj - mean[..., None]
    var = (dev * dev).sum(axis=-1) / (n - 1)
    sem = np.sqrt(var / n)
    # identical samples (e.g. the t = 0 record): report them exactly, not mean-rounded
    const = by_traj.min(axis=-1) == by_traj.max(axis=-1)
    mean = np.where(const, by_traj[..., 0], mean)
    sem = np.where(const, 0.0, sem)
    return mean, sem


def run_ensemble(task: EnsembleTask, n_traj: int, master_seed: int, workers: int | None = None, keep_samples=False):
    if n_traj < 1:
        raise ValidationError("n_traj must be >= 1")
    workers = default_workers() if workers is None else int(workers)
    workers = max(1, min(workers, n_traj))
    bounds = np.linspace(0, n_traj, workers + 1).astype(int)
    jobs = [(task, master_seed, int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    if workers == 1:
        chunks = [_run_slice(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_slice, jobs))
    samples = np.concatenate(chunks, axis=0)
    mean, sem = reduce_samples(samples)
    return EnsembleResult(
        times=task.times,
        mean_bloch=mean,
        sem_bloch=sem,
        n_traj=n_traj,
        config_digest=task.digest(master_seed),
        samples=samples if keep_samples else None,
    )


@dataclass
class ValidationReport:
    max_abs_z: np.ndarray
    fraction_within: float
    k_sigma: float
    min_fraction: float
    n_points: int

    @property
    def passed(self) -> bool:
        return self.fraction_within >= self.min_fraction

    def summary(self) -> str:
        z = ", ".join(f"{v:.2f}" for v in self.max_abs_z)
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"{verdict}: {self.fraction_within:.4f} of {self.n_points} values within "
            f"{self.k_sigma:g} SEM (need {self.min_fraction:g}); max |z| per component [{z}]"
        )


def z_scores(mean, sem, reference, exact_tol=1e-12):
    """``|mean - reference| / sem``; zero-SEM points must match to ``exact_tol``."""
    diff = np.abs(np.asarray(mean) - np.asarray(reference))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sem > 0, diff / np.where(sem > 0, sem, 1.0), np.where(diff <= exact_tol, 0.0, np.inf))
    return z


def validate_against_oracle(
    result: EnsembleResult,
    oracle: OracleCurve,
    k_sigma: float = 3.0,
    min_fraction: float = 0.99,
    components=(0, 1, 2),
    t_range=None,
) -> ValidationReport:
    if len(result.times) != len(oracle.times) or not np.allclose(result.times, oracle.times, rtol=0, atol=1e-12):
        raise ValidationError("ensemble and oracle time grids differ")
    mask = np.ones(len(result.times), dtype=bool)
    if t_range is not None:
        lo, hi = t_range
        eps = 1e-9 * max(1.0, abs(hi))
        mask &= (result.times >= lo - eps) & (result.times <= hi + eps)
    comps = list(components)
    z = z_scores(result.mean_bloch[mask][:, comps], result.sem_bloch[mask][:, comps], oracle.bloch[mask][:, comps])
    n = z.size
    frac = float(np.mean(z <= k_sigma)) if n else 1.0
    max_z = z.max(axis=0) if n else np.zeros(len(comps))
    return ValidationReport(max_z, frac, k_sigma, min_fraction, n)
