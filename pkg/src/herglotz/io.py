"""Deterministic CSV and JSON formats for signals, trajectories, traces and reports.

Every float is written with 17 significant digits so files round-trip
exactly and identical inputs give byte-identical outputs.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from herglotz.core import Trajectory
from herglotz.errors import ProblemError
from herglotz.scale import FieldSamples, Kind, SampledSignal, UniformGrid


def fmt(x: float) -> str:
    """A float at 17 significant digits (``nan``/``inf`` spelled out)."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def _dump(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_dump(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{_dump(v, indent, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        # JSON has no spelling for non-finite numbers; they become null
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, complex):
        return _dump({"re": obj.real, "im": obj.imag}, indent, level)
    return json.dumps(str(obj))


def dumps(doc, indent: int = 2) -> str:
    """JSON text with keys in insertion order and 17-digit floats."""
    return _dump(doc, indent, 0) + "\n"


def write_json(path: Path, doc) -> None:
    Path(path).write_text(dumps(doc))


def _write_rows(path: Path | None, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def _sidecar(path: Path) -> Path:
    return Path(path).with_suffix(".json")


def signal_csv(signal: SampledSignal, path: Path | None = None, sidecar: bool = True) -> str:
    """Write ``t,re,im`` rows (and a grid sidecar next to ``path``); returns the CSV text."""
    v = signal.values
    text = _write_rows(path, ("t", "re", "im"), zip(signal.t, v.real, v.imag))
    if path is not None and sidecar:
        write_json(_sidecar(path), signal.grid.to_json())
    return text


def _read_table(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ProblemError(f"{path}: empty CSV file")
    header = [h.strip() for h in rows[0]]
    try:
        data = np.array([[float(c) for c in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise ProblemError(f"{path}: non-numeric entry ({exc})") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ProblemError(f"{path}: rows do not match the header")
    return header, data


def _grid_for(path: Path, t: np.ndarray, grid: UniformGrid | None) -> UniformGrid:
    side = _sidecar(path)
    if side.exists():
        doc = json.loads(side.read_text())
        return UniformGrid.from_json(doc)
    if grid is not None:
        return grid
    if len(t) < 2:
        raise ProblemError(f"{path}: need at least two samples")
    step = (t[-1] - t[0]) / (len(t) - 1)
    return UniformGrid(float(t[0]), float(t[-1]), float(step))


def read_signal_csv(path: Path, grid: UniformGrid | None = None) -> SampledSignal:
    """Read ``t,re,im`` (or ``t,value``) rows; the grid comes from the sidecar when present."""
    header, data = _read_table(path)
    if header[:1] != ["t"] or len(header) not in (2, 3):
        raise ProblemError(f"{path}: expected columns t,re,im or t,value")
    g = _grid_for(path, data[:, 0], grid)
    if g.node_count != len(data):
        raise ProblemError(f"{path}: {len(data)} rows for a grid of {g.node_count} nodes")
    if not np.allclose(data[:, 0], g.nodes, rtol=0, atol=1e-9 * max(1.0, abs(g.b - g.a))):
        raise ProblemError(f"{path}: t column does not match the grid")
    if len(header) == 2:
        return SampledSignal(g, data[:, 1], Kind.REAL)
    return SampledSignal(g, data[:, 1] + 1j * data[:, 2])


def trajectory_csv(x: Trajectory, path: Path | None = None) -> str:
    header = ["t"] + [f"x{i + 1}" for i in range(x.n)]
    arr = x.array
    text = _write_rows(path, header, zip(x.grid.nodes, *arr))
    if path is not None:
        write_json(_sidecar(path), x.grid.to_json())
    return text


def read_trajectory_csv(path: Path, a: float, b: float, step: float) -> Trajectory:
    """Read ``t,x1,...`` rows on ``[a, b]``; margins are inferred from the row count."""
    header, data = _read_table(path)
    if header[0] != "t" or header[1:] != [f"x{i + 1}" for i in range(len(header) - 1)]:
        raise ProblemError(f"{path}: expected columns t,x1,...,xn")
    side = _sidecar(path)
    if side.exists():
        g = UniformGrid.from_json(json.loads(side.read_text()))
    else:
        intervals = int(round((b - a) / step))
        extra = len(data) - intervals - 1
        if extra < 0 or extra % 2:
            raise ProblemError(f"{path}: row count does not fit [a, b] with symmetric margins")
        g = UniformGrid(a, b, step, extra // 2)
    if g.node_count != len(data):
        raise ProblemError(f"{path}: {len(data)} rows for a grid of {g.node_count} nodes")
    return Trajectory.from_array(g, data[:, 1:].T)


def trace_csv(trace, path: Path | None = None) -> str:
    rows = ((str(r.iteration), r.objective.real, r.objective.imag, r.grad_norm, r.step) for r in trace)
    return _write_rows(path, ("iter", "objective_re", "objective_im", "grad_norm", "step"), rows)


def field_csv(field: FieldSamples, directory: Path, stem: str = "slice") -> dict:
    """One ``x1[,x2],re,im`` CSV per time node plus a ``manifest.json``; returns the manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    tg, space = field.grids[0], field.grids[1:]
    cols = [f"x{i + 1}" for i in range(len(space))]
    mesh = np.meshgrid(*[g.nodes for g in space], indexing="ij")
    coords = [m.ravel() for m in mesh]
    files = []
    for k, t in enumerate(tg.nodes):
        vals = np.asarray(field.values[k]).ravel()
        name = f"{stem}_{k:05d}.csv"
        _write_rows(directory / name, cols + ["re", "im"], zip(*coords, vals.real, vals.imag))
        files.append({"t": float(t), "file": name})
    manifest = {"grids": [g.to_json() for g in field.grids], "slices": files}
    write_json(directory / "manifest.json", manifest)
    return manifest


def study_csv(hs: Sequence[float], values: Sequence[float], slope: float, path: Path | None = None) -> str:
    return _write_rows(path, ("h", "value", "slope"), ((h, v, slope) for h, v in zip(hs, values)))
