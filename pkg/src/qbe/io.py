"""CSV and metadata writers. Floats use 17 significant digits so they round-trip."""
from __future__ import annotations

import csv
import json
import platform
from pathlib import Path

import numpy as np
import scipy

from .diagnostics import PhaseSpaceField

TIMESERIES_HEADER = ("t", "mass", "energy", "entropy", "entropy_production", "c_f",
                     "f0_extrapolated", "extrapolation_ok")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def write_timeseries(path, records) -> Path:
    return write_csv(path, TIMESERIES_HEADER,
                     ([getattr(r, name) for name in TIMESERIES_HEADER] for r in records))


def write_snapshot(path, grid, f) -> Path:
    return write_csv(path, ("epsilon", "f"), zip(grid.nodes, f))


def read_snapshot(path) -> tuple[np.ndarray, np.ndarray]:
    with Path(path).open() as fh:
        rows = list(csv.DictReader(fh))
    return (np.array([float(r["epsilon"]) for r in rows]),
            np.array([float(r["f"]) for r in rows]))


def write_phase_space(path, field: PhaseSpaceField) -> Path:
    rows = ((a, b, field.values[ia, ib])
            for ia, a in enumerate(field.p1) for ib, b in enumerate(field.p2))
    return write_csv(path, ("p1", "p2", "F"), rows)


def write_condensate_map(path, entries) -> Path:
    return write_csv(path, ("M", "E", "fraction"), ((e.mass, e.energy, e.fraction) for e in entries))


def versions() -> dict:
    from . import __version__
    return {"qbe": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def write_metadata(path, metadata: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = dict(metadata)
    data.setdefault("versions", versions())
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return path


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, (tuple, set, np.ndarray)):
        return list(x)
    if isinstance(x, Path):
        return str(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")
