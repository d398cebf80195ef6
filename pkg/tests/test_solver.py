import math

import numpy as np
import pytest

from herglotz.core import HerglotzProblem, transversality_residual, integrate_z
from herglotz.errors import InsufficientMargin, LineSearchFailure, MaxIterationsExceeded, ProblemError
from herglotz.solver import SolveMode, SolveOptions, extremize

E1 = math.e - 1


def problem(lag, right=(1.0,), step=0.01, h=0.02, left=(0.0,)):
    return HerglotzProblem.build(lag, 0.0, 1.0, list(left), list(right), step, h)


def inner(p, x):
    g = x.grid
    return g.nodes[g.ia:g.ib + 1], x[0].values[g.ia:g.ib + 1]


def test_recovers_exponential_extremal():
    p = problem("v1^2 + z", right=(E1,))
    res = extremize(p, p.trajectory(["t*(exp(1)-1)"]))
    t, x = inner(p, res.trajectory)
    assert res.converged
    assert np.max(np.abs(x - (np.exp(t) - 1))) <= 1e-2


def test_straight_line_for_z_free_lagrangian():
    p = problem("v1^2")
    res = extremize(p, p.trajectory(["t + 0.2*sin(3*t)*t*(1-t)"]))
    t, x = inner(p, res.trajectory)
    assert np.max(np.abs(x - t)) <= 1e-3
    assert abs(integrate_z(p, res.trajectory).terminal.real - 1) <= 1e-3


def test_free_end_satisfies_transversality():
    p = problem("v1^2 + z", right=(None,))
    res = extremize(p, p.trajectory(["0.3*t"]))
    x = res.trajectory
    assert abs(x[0].values[x.grid.ib]) <= 1e-2
    tr = transversality_residual(p, x, integrate_z(p, x))
    assert abs(tr[1]) <= 5e-2


def test_boundary_values_are_preserved_bitwise():
    p = problem("v1^2 + z", right=(E1,))
    res = extremize(p, p.trajectory(["t"]))
    g = res.trajectory.grid
    v = res.trajectory[0].values
    assert v[g.ia] == 0.0 and v[g.ib] == E1


def test_minimize_trace_is_monotone():
    p = problem("(x1-sin(t))^2 + 0.1*z", right=(None,))
    res = extremize(p, p.trajectory(["0"]), SolveOptions(mode="minimize", max_iterations=500))
    obj = [row.objective.real for row in res.trace]
    assert all(b <= a + 1e-12 for a, b in zip(obj, obj[1:]))
    assert obj[-1] < obj[0]


def test_maximize_tracks_target():
    p = problem("-(x1-t^2)^2", right=(None,))
    res = extremize(p, p.trajectory(["0"]), SolveOptions(mode="maximize", max_iterations=500))
    t, x = inner(p, res.trajectory)
    assert np.max(np.abs(x - t ** 2)) <= 1e-2


def test_minimizing_velocity_square_is_unbounded():
    # Re z(b) picks up -Im(box x)^2 from the imaginary part of the operator,
    # so a rough enough path lowers it without limit.
    p = problem("v1^2")
    with pytest.raises((LineSearchFailure, MaxIterationsExceeded)):
        extremize(p, p.trajectory(["t"]), SolveOptions(mode="minimize", max_iterations=50))


def test_max_iterations_carries_best_iterate():
    p = problem("v1^2 + z", right=(E1,))
    with pytest.raises(MaxIterationsExceeded) as info:
        extremize(p, p.trajectory(["t"]), SolveOptions(max_iterations=1, gradient_tolerance=1e-300))
    res = info.value.result
    assert not res.certified and len(res.trace) >= 1


def test_solver_needs_double_margin():
    p = problem("v1^2")
    with pytest.raises(InsufficientMargin):
        extremize(p, p.trajectory(["t"], margin_nodes=3))


@pytest.mark.parametrize("kwargs", [
    {"max_iterations": 0},
    {"shrink": 1.0},
    {"gradient_tolerance": 0.0},
    {"sufficient_decrease": 1.5},
    {"band": 0},
])
def test_options_validation(kwargs):
    with pytest.raises(ProblemError):
        SolveOptions(**kwargs)


def test_mode_from_string():
    assert SolveOptions(mode="maximize").mode is SolveMode.MAXIMIZE
