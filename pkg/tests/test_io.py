import json
import math

import numpy as np
import pytest

from herglotz.core import HerglotzProblem
from herglotz.errors import ProblemError
from herglotz.io import (
    dumps,
    field_csv,
    fmt,
    read_signal_csv,
    read_trajectory_csv,
    signal_csv,
    study_csv,
    trace_csv,
    trajectory_csv,
)
from herglotz.scale import FieldSamples, SampledSignal, UniformGrid
from herglotz.solver import TraceRow


def test_fmt_uses_seventeen_digits():
    assert float(fmt(0.1)) == 0.1
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(float("nan")) == "nan"


def test_json_non_finite_is_null():
    doc = json.loads(dumps({"a": float("nan"), "b": [1.0, float("inf")], "c": 1 + 2j}))
    assert doc == {"a": None, "b": [1.0, None], "c": {"re": 1.0, "im": 2.0}}


def test_json_keeps_insertion_order():
    assert list(json.loads(dumps({"z": 1, "a": 2}))) == ["z", "a"]


def test_signal_round_trip(tmp_path):
    g = UniformGrid(0.0, 1.0, 0.1, 3)
    f = SampledSignal.from_function(g, lambda t: np.exp(1j * t) / 3)
    path = tmp_path / "f.csv"
    signal_csv(f, path)
    back = read_signal_csv(path)
    assert back.grid == g
    assert np.array_equal(back.values, f.values)


def test_signal_without_sidecar_infers_grid(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("t,value\n0,0\n0.5,0.25\n1,1\n")
    f = read_signal_csv(path)
    assert f.grid.step == 0.5 and np.array_equal(f.values, [0, 0.25, 1])


def test_signal_rejects_bad_header(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("x,y\n0,0\n1,1\n")
    with pytest.raises(ProblemError):
        read_signal_csv(path)


def test_trajectory_round_trip(tmp_path):
    p = HerglotzProblem.build("v1^2 + v2^2", 0.0, 1.0, [0.0, 1.0], [1.0, 0.0], 0.05, 0.1)
    x = p.trajectory(["t^2", "cos(t)/3"])
    path = tmp_path / "x.csv"
    trajectory_csv(x, path)
    assert np.array_equal(read_trajectory_csv(path, 0.0, 1.0, 0.05).array, x.array)
    path.with_suffix(".json").unlink()
    assert np.array_equal(read_trajectory_csv(path, 0.0, 1.0, 0.05).array, x.array)


def test_trajectory_rejects_odd_margin(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("t,x1\n" + "".join(f"{k / 4},{k}\n" for k in range(6)))
    with pytest.raises(ProblemError):
        read_trajectory_csv(path, 0.0, 1.0, 0.25)


def test_trace_columns():
    text = trace_csv([TraceRow(0, 1 + 0.5j, 2.0, 1.0)])
    lines = text.strip().splitlines()
    assert lines[0] == "iter,objective_re,objective_im,grad_norm,step"
    assert lines[1] == "0,1,0.5,2,1"


def test_field_manifest(tmp_path):
    grids = [UniformGrid(0.0, 1.0, 0.5), UniformGrid(0.0, 1.0, 0.25)]
    u = FieldSamples.from_function(grids, lambda t, x: t + x)
    manifest = field_csv(u, tmp_path)
    assert [s["t"] for s in manifest["slices"]] == [0.0, 0.5, 1.0]
    rows = (tmp_path / manifest["slices"][1]["file"]).read_text().strip().splitlines()
    assert rows[0] == "x1,re,im" and len(rows) == 6
    assert json.loads((tmp_path / "manifest.json").read_text()) == manifest


def test_study_csv_repeats_slope():
    text = study_csv([0.1, 0.05], [1.0, 0.5], 1.0)
    assert text.strip().splitlines() == ["h,value,slope", "0.10000000000000001,1,1", "0.050000000000000003,0.5,1"]


def test_output_is_deterministic(tmp_path):
    g = UniformGrid(0.0, 1.0, 0.01, 2)
    f = SampledSignal.from_function(g, lambda t: np.sin(math.pi * t))
    assert signal_csv(f) == signal_csv(f)
