"""Figure presets: ensembles, matching oracle curves, and a manifest per run.

Time is measured in units of the natural period of each preset: ``T_gamma = 1``
for ``fig-case1`` and ``fidelity-sweep`` (no drive), ``T_omega = 1`` for the
rest. Delays are given as ``alpha``: ``tau = alpha * T_gamma`` in case 1 and
``tau = alpha * T_omega / 2`` for the driven presets.
"""

from __future__ import annotations

import math
import time
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, build_config
from .engine import COMMUTE_TOL, run_trajectory
from .ensemble import EnsembleTask, default_workers, run_ensemble
from .noise import NoiseStream
from .oracles import (
    OracleCurve,
    commuting_average,
    frozen_average,
    lindblad_propagate,
    rabi_reference,
    steady_fidelity,
)
from .output import build_id, emit, write_csv_rows, write_manifest
from .quantum import commutator_norm, density_to_bloch

TWO_PI = 2 * math.pi
EQUATOR = (1 / math.sqrt(2), 1 / math.sqrt(2), 0.0)


def task_from_config(cfg: ExperimentConfig) -> EnsembleTask:
    return EnsembleTask(cfg.step_config(), cfg.rho0(), cfg.n_steps, cfg.output.record_every, cfg.sim.method)


def oracle_for(cfg: ExperimentConfig, times):
    """Exact ensemble average for ``cfg`` where one is known.

    Returns ``(curve, t_range)``; the curve is only meaningful inside
    ``t_range``. Without feedback the Lindblad solution holds everywhere.
    With feedback it holds up to ``tau``; after that the frozen (``H = 0``)
    and commuting cases are exact and the non-commuting case has no closed
    form, so the range stops at ``tau``.
    """
    H, L, rho0 = cfg.hamiltonian(), cfg.coupling(), cfg.rho0()
    tau = cfg.sim.tau
    t_end = float(times[-1])
    if not cfg.sim.feedback:
        return OracleCurve.from_function(lambda t: lindblad_propagate(rho0, H, L, t), times, "lindblad"), (0.0, t_end)
    if not np.any(H):
        return OracleCurve.from_function(lambda t: frozen_average(rho0, L, tau, t), times, "frozen"), (0.0, t_end)
    if commutator_norm(H, L) <= COMMUTE_TOL:
        fn = lambda t: commuting_average(rho0, H, L, tau, t)  # noqa: E731
        return OracleCurve.from_function(fn, times, "commuting"), (0.0, t_end)
    if tau == 0:
        fn = lambda t: rabi_reference(rho0, cfg.system.omega, cfg.system.rabi_axis, t)  # noqa: E731
        return OracleCurve.from_function(fn, times, "unitary (dt -> 0 limit)"), (0.0, t_end)
    return OracleCurve.from_function(lambda t: lindblad_propagate(rho0, H, L, t), times, "lindblad"), (0.0, tau)


def make_config(**kw) -> ExperimentConfig:
    """Build a validated config from flat keyword arguments."""
    raw = {
        "system": {k: kw[k] for k in ("omega", "rabi_axis", "gamma") if k in kw},
        "sim": {k: kw[k] for k in ("dt", "t_final", "tau", "method", "feedback") if k in kw},
        "ensemble": {k: kw[k] for k in ("n_traj", "master_seed", "workers") if k in kw},
        "initial_state": {"bloch": list(kw.get("bloch", EQUATOR))},
        "output": {"record_every": kw.get("record_every", 10)},
    }
    return build_config(raw)


def _run(cfg: ExperimentConfig, keep_samples=False):
    return run_ensemble(
        task_from_config(cfg), cfg.ensemble.n_traj, cfg.ensemble.master_seed, cfg.ensemble.workers, keep_samples
    )


def _tag(alpha) -> str:
    return f"{alpha:g}"


# ---------------------------------------------------------------- presets


def _fig_bloch(p, out):
    """Single trajectories for a few delays, all driven by the same noise stream."""
    files = []
    for frac in p["tau_fractions"]:
        cfg = make_config(
            omega=p["omega"], rabi_axis=p["rabi_axis"], gamma=p["gamma"], dt=p["dt"],
            t_final=p["t_final"], tau=frac * TWO_PI / p["omega"], n_traj=1, master_seed=p["master_seed"],
        )
        stream = NoiseStream(p["master_seed"], 0)
        rec = run_trajectory(cfg.step_config(), cfg.rho0(), stream, cfg.n_steps, p["record_every"])
        curve = OracleCurve(rec.times, rec.bloch, f"trajectory tau={frac:g}")
        files.append(emit(curve, out / f"bloch_tau_{_tag(frac)}.csv"))
    return files


def _case_curves(p, out, base, alpha_to_tau, prefix):
    files = []
    me = make_config(**base, tau=0.0, feedback=False)
    res = _run(me)
    files.append(emit(res, out / f"{prefix}_me.csv"))
    for alpha in p["alphas"]:
        cfg = make_config(**base, tau=alpha_to_tau(alpha))
        res = _run(cfg)
        files.append(emit(res, out / f"{prefix}_alpha_{_tag(alpha)}.csv"))
        curve, _ = oracle_for(cfg, res.times)
        files.append(emit(curve, out / f"{prefix}_alpha_{_tag(alpha)}_oracle.csv"))
    return files


def _common(p):
    return {k: p[k] for k in ("dt", "t_final", "n_traj", "master_seed", "workers", "record_every", "method")}


def _fig_case1(p, out):
    base = dict(_common(p), omega=p["omega"], rabi_axis="none", gamma=p["gamma"])
    T_gamma = 1 / p["gamma"]
    return _case_curves(p, out, base, lambda a: a * T_gamma, "case1")


def _fig_case2(p, out):
    base = dict(_common(p), omega=p["omega"], rabi_axis="z", gamma=p["gamma"])
    return _case_curves(p, out, base, lambda a: a * math.pi / p["omega"], "case2")


def _fig_case3(p, out):
    base = dict(_common(p), omega=p["omega"], rabi_axis="x", gamma=p["gamma"])
    files = []
    me = make_config(**base, tau=0.0, feedback=False)
    res = _run(me)
    files.append(emit(res, out / "case3_me.csv"))
    curve, _ = oracle_for(me, res.times)
    files.append(emit(curve, out / "case3_me_oracle.csv"))
    rabi = OracleCurve.from_function(lambda t: rabi_reference(me.rho0(), p["omega"], "x", t), res.times, "unitary")
    files.append(emit(rabi, out / "case3_unitary.csv"))
    for alpha in p["alphas"]:
        cfg = make_config(**base, tau=alpha * math.pi / p["omega"])
        files.append(emit(_run(cfg), out / f"case3_alpha_{_tag(alpha)}.csv"))
    return files


def fidelity_point(sz0, gamma_tau, p):
    """Ensemble estimate of ``Tr(rho0 rho_av)`` on the plateau, with its SEM."""
    r = math.sqrt(max(0.0, 1 - sz0 * sz0))
    b0 = (r / math.sqrt(2), r / math.sqrt(2), sz0)
    gamma = p["gamma"]
    tau = gamma_tau / gamma
    cfg = make_config(
        omega=p["omega"], rabi_axis="none", gamma=gamma, dt=p["dt"], t_final=tau + p["settle"],
        tau=tau, n_traj=p["n_traj"], master_seed=p["master_seed"], workers=p["workers"],
        method=p["method"], record_every=1, bloch=b0,
    )
    task = task_from_config(cfg)
    task = EnsembleTask(task.step, task.rho0, task.n_steps, task.n_steps, task.method)
    res = run_ensemble(task, cfg.ensemble.n_traj, cfg.ensemble.master_seed, cfg.ensemble.workers, keep_samples=True)
    final = res.samples[:, -1, :]
    fid = 0.5 * (1 + final @ np.asarray(b0))
    n = len(fid)
    sem = float(np.std(fid, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return steady_fidelity(sz0, gamma, tau), float(np.mean(fid)), sem


def _fidelity_sweep(p, out):
    files = []
    for sz0 in p["sz0"]:
        rows = [(gt, *fidelity_point(sz0, gt, p)) for gt in p["gamma_tau"]]
        files.append(
            write_csv_rows(out / f"fidelity_sz0_{_tag(sz0)}.csv", ("gamma_tau", "F_analytic", "F_ensemble", "SEM"), rows)
        )
    return files


def _delay_sweep(p, out):
    """End-of-run Bloch components against delay for the non-commuting drive."""
    base = dict(_common(p), omega=p["omega"], rabi_axis="x", gamma=p["gamma"])
    base["record_every"] = round(p["t_final"] / p["dt"])
    rows = []
    me = make_config(**base, tau=0.0, feedback=False)
    me_end = density_to_bloch(lindblad_propagate(me.rho0(), me.hamiltonian(), me.coupling(), p["t_final"]))
    for alpha in p["alphas"]:
        tau = alpha * math.pi / p["omega"]
        cfg = make_config(**base, tau=tau)
        res = _run(cfg)
        m, s = res.mean_bloch[-1], res.sem_bloch[-1]
        rows.append((alpha, tau, m[0], s[0], m[2], s[2], me_end[0], me_end[2]))
    header = ("alpha", "tau", "Sx_end", "Sx_end_sem", "Sz_end", "Sz_end_sem", "Sx_me", "Sz_me")
    return [write_csv_rows(out / "delay_sweep.csv", header, rows)]


_SHARED = {"n_traj": 5000, "master_seed": 20240607, "workers": None, "method": "operational"}

PRESETS = {
    "fig-bloch": (
        _fig_bloch,
        {"omega": TWO_PI, "gamma": 0.1, "rabi_axis": "x", "dt": 1e-3, "t_final": 1.0, "tau_fractions": [0.0, 1e-3, 0.1],
         "record_every": 1, "master_seed": 20240607},
        "gamma = 0.1 / T_omega and a drive about x are visual choices; the figure does not fix them",
    ),
    "fig-case1": (
        _fig_case1,
        dict(_SHARED, omega=0.0, gamma=1.0, dt=1e-3, t_final=3.0, alphas=[0.1, 0.3, 0.5], record_every=10),
        "time unit T_gamma; tau = alpha * T_gamma",
    ),
    "fig-case2": (
        _fig_case2,
        dict(_SHARED, omega=TWO_PI, gamma=0.5, dt=1e-3, t_final=5.0, alphas=[0.2, 0.6, 1.0], record_every=10),
        "time unit T_omega; tau = alpha * T_omega / 2; gamma = 0.5 / T_omega is a chosen value",
    ),
    "fig-case3": (
        _fig_case3,
        dict(_SHARED, omega=TWO_PI, gamma=0.5, dt=1e-4, t_final=5.0, alphas=[2.0, 3.0, 3.5, 4.0, 5.0], record_every=100),
        "time unit T_omega; tau = alpha * T_omega / 2; gamma = 0.5 / T_omega is a chosen value",
    ),
    "fidelity-sweep": (
        _fidelity_sweep,
        dict(_SHARED, omega=0.0, gamma=1.0, dt=1e-3, settle=0.5, sz0=[0.0, 0.6], gamma_tau=[0.1, 0.25, 0.5, 0.75, 1.0]),
        "time unit T_gamma; fidelity read at t = tau + settle",
    ),
    "delay-sweep": (
        _delay_sweep,
        dict(_SHARED, omega=TWO_PI, gamma=0.5, dt=1e-3, t_final=5.0, alphas=[0.5 * k for k in range(11)], record_every=1),
        "time unit T_omega; drive about x; tau = alpha * T_omega / 2",
    ),
}


def preset_params(name, overrides=None) -> dict:
    if name not in PRESETS:
        raise ConfigError([f"unknown preset {name!r}; choose from {sorted(PRESETS)}"])
    _, defaults, _ = PRESETS[name]
    params = dict(defaults)
    for key, value in (overrides or {}).items():
        if key not in params:
            raise ConfigError([f"{name}.{key}: unknown preset parameter"])
        params[key] = value
    if params.get("workers") is None and "workers" in params:
        params["workers"] = default_workers()
    return params


def run_preset(name, overrides=None, out="out") -> list[Path]:
    """Run a preset, write its CSV files plus ``manifest.json`` and return the paths."""
    params = preset_params(name, overrides)
    runner, _, note = PRESETS[name]
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".nkfb-write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from exc
    start = time.perf_counter()
    files = runner(params, out)
    elapsed = time.perf_counter() - start
    manifest = {
        "preset": name,
        "params": dict(params, note=note),
        "seed": params.get("master_seed"),
        "n_traj": params.get("n_traj", 1),
        "workers": params.get("workers", 1),
        "build_id": build_id(),
        "elapsed_s": round(elapsed, 3),
        "files": [p.name for p in files],
    }
    files.append(write_manifest(out, manifest))
    return files


