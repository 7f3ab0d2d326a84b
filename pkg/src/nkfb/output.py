"""CSV/JSON emission of ensemble results and oracle curves.

Floats are written with 9 significant digits so files diff cleanly and are
reproduced byte for byte by reruns with the same seed. Oracle curves carry
zero SEM columns.
"""

from __future__ import annotations

import json
import os
import subprocess
from pathlib import Path

import numpy as np

from .ensemble import EnsembleResult
from .oracles import OracleCurve

HEADER = ("t", "Sx", "Sy", "Sz", "Sx_sem", "Sy_sem", "Sz_sem")


def fmt(v) -> str:
    return format(float(v), ".9g")


def _table(data):
    if isinstance(data, EnsembleResult):
        return data.times, data.mean_bloch, data.sem_bloch
    if isinstance(data, OracleCurve):
        return data.times, data.bloch, np.zeros_like(data.bloch)
    raise TypeError(f"cannot emit {type(data).__name__}")


def to_csv(data) -> str:
    times, mean, sem = _table(data)
    lines = [",".join(HEADER)]
    for t, m, s in zip(times, mean, sem):
        lines.append(",".join(fmt(v) for v in (t, *m, *s)))
    return "\n".join(lines) + "\n"


def to_json(data, manifest=None) -> str:
    times, mean, sem = _table(data)
    cols = np.column_stack([times, mean, sem])
    doc = {name: [float(fmt(v)) for v in cols[:, k]] for k, name in enumerate(HEADER)}
    if isinstance(data, EnsembleResult):
        doc["n_traj"] = data.n_traj
        doc["config_digest"] = data.config_digest
    doc["manifest"] = manifest or {}
    return json.dumps(doc, indent=1) + "\n"


def emit(data, path, format="csv", manifest=None) -> Path:
    """Write ``data`` to ``path``; the suffix is not inferred, ``format`` decides."""
    path = Path(path)
    if format == "csv":
        text = to_csv(data)
    elif format == "json":
        text = to_json(data, manifest)
    else:
        raise ValueError(f"unknown format {format!r}")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def read_table(path) -> dict:
    """Read a file written by :func:`emit` back into arrays keyed by column name."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        return {k: np.asarray(doc[k], dtype=float) for k in HEADER}
    rows = text.strip("\n").split("\n")
    header = rows[0].split(",")
    values = np.array([[float(v) for v in r.split(",")] for r in rows[1:]]).reshape(-1, len(header))
    return {name: values[:, k] for k, name in enumerate(header)}


def write_csv_rows(path, header, rows) -> Path:
    """Generic numeric CSV (used by the sweep presets)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)] + [",".join(fmt(v) for v in row) for row in rows]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def build_id() -> str:
    from . import __version__

    here = os.path.dirname(os.path.abspath(__file__))
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=here,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return f"nkfb-{__version__}"


def write_manifest(out_dir, manifest: dict) -> Path:
    path = Path(out_dir) / "manifest.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True, default=_jsonable)
        fh.write("\n")
    return path


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, Path):
        return str(v)
    raise TypeError(f"not JSON serializable: {type(v).__name__}")
