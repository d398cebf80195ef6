import math

import numpy as np
import pytest

from herglotz.core import (
    HerglotzProblem,
    Trajectory,
    classical_reduction_check,
    cubic_midpoints,
    el_residual,
    integrate_z,
    lambda_weight,
    rk4_node_weights,
    terminal_gradient,
    transversality_residual,
)
from herglotz.errors import (
    GridMismatch,
    InsufficientMargin,
    NoFreeBoundary,
    NotZFree,
    ProblemError,
    UnknownIdentifier,
)

E1 = math.e - 1


def problem(lag, left=(0.0,), right=(1.0,), step=0.01, h=0.02, z_a=0.0):
    return HerglotzProblem.build(lag, 0.0, 1.0, list(left), list(right), step, h, z_a)


def run(p, funcs, margin=None):
    x = p.trajectory(funcs, margin)
    return x, integrate_z(p, x)


# -- problem and trajectory types ---------------------------------------------

def test_dimension_must_match_alphabet():
    with pytest.raises(UnknownIdentifier):
        problem("v1^2 + v2^2")


def test_boundaries_are_written_into_nodes():
    p = problem("v1^2", right=(2.0,))
    x = p.trajectory(["sin(t)"])
    g = x.grid
    assert x[0].values[g.ia] == 0.0 and x[0].values[g.ib] == 2.0


def test_check_rejects_boundary_drift():
    p = problem("v1^2")
    g = p.grid()
    with pytest.raises(ProblemError):
        p.check(Trajectory.from_array(g, g.nodes + 0.1))


def test_trajectory_grid_must_match():
    p = problem("v1^2")
    other = HerglotzProblem.build("v1^2", 0.0, 1.0, [0.0], [1.0], 0.02, 0.02)
    with pytest.raises(GridMismatch):
        p.check(other.trajectory(["t"]))


def test_cubic_midpoints_exact_for_cubics():
    t = np.linspace(0, 1, 11)
    mids = cubic_midpoints(t ** 3 - t)
    tm = (t[:-1] + t[1:]) / 2
    assert np.allclose(mids, tm ** 3 - tm, atol=1e-15)


def test_rk4_node_weights_sum_to_length():
    w = rk4_node_weights(21, 5, 15, 0.1)
    assert w.sum() == pytest.approx(1.0)
    assert np.all(w[:4] == 0) and np.all(w[17:] == 0)


# -- integrate_z --------------------------------------------------------------

def test_z_of_v1_along_line():
    _, z = run(problem("v1"), ["t"])
    assert abs(z.terminal.real - 1) <= 1e-10


def test_z_of_z_is_exponential():
    _, z = run(problem("z", z_a=1.0), ["t^2"])
    assert abs(z.terminal - math.e) <= 1e-8


def test_z_of_zero_is_constant():
    _, z = run(problem("0", z_a=0.25), ["t"])
    assert np.all(z.z.values == 0.25)


def test_z_starts_at_z_a():
    _, z = run(problem("v1^2 + z", z_a=0.5 + 0.5j), ["exp(t)-1"])
    g = z.z.grid
    assert z.z.values[g.ia] == 0.5 + 0.5j
    assert z.terminal == z.z.values[g.ib]


def test_integrate_z_needs_margin():
    p = problem("v1^2")
    with pytest.raises(InsufficientMargin):
        integrate_z(p, p.trajectory(["t"], margin_nodes=1))


# -- lambda -------------------------------------------------------------------

def test_lambda_is_one_without_z():
    p = problem("v1^2")
    x, z = run(p, ["t"])
    assert np.all(lambda_weight(p, x, z).values == 1)


def test_lambda_is_decaying_exponential():
    p = problem("v1^2 + z", right=(E1,))
    x, z = run(p, ["exp(t)-1"])
    lam = lambda_weight(p, x, z)
    assert lam.values[lam.grid.ia] == 1
    inner = lam.restrict(0)
    assert np.max(np.abs(inner.values - np.exp(-inner.t))) <= 1e-8


def test_lambda_is_positive_for_real_coupling():
    p = problem("v1^2 + sin(t)*z*x1", right=(E1,))
    x, z = run(p, ["exp(t)-1"])
    lam = lambda_weight(p, x, z).values
    assert np.max(np.abs(lam.imag)) <= 1e-12 and np.all(lam.real > 0)


# -- residuals ----------------------------------------------------------------

def test_residual_of_straight_line():
    p = problem("v1^2")
    x, z = run(p, ["t"])
    assert max(el_residual(p, x, z).sup_norms) <= 1e-10


def test_residual_of_x1_is_minus_one():
    p = problem("x1")
    x, z = run(p, ["sin(t)"])
    r = el_residual(p, x, z).residual[0].values
    assert np.max(np.abs(r + 1)) <= 1e-10


def test_residual_decays_for_analytic_extremal():
    sups = []
    for step in (0.02, 0.01, 0.005):
        p = problem("v1^2 + z", right=(E1,), step=step, h=2 * step)
        x, z = run(p, ["exp(t)-1"])
        sups.append(max(el_residual(p, x, z).sup_norms))
    assert sups[0] / sups[1] == pytest.approx(2, rel=0.3)
    assert sups[1] / sups[2] == pytest.approx(2, rel=0.3)


def test_residual_needs_double_margin():
    p = problem("v1^2 + z", right=(E1,))
    x, z = run(p, ["exp(t)-1"], margin=3)
    with pytest.raises(InsufficientMargin):
        el_residual(p, x, z)


def test_report_json_shape():
    p = problem("v1^2 + z", right=(None,))
    x, z = run(p, ["0"])
    doc = el_residual(p, x, z).to_json()
    for key in ("sup_norms", "transversality", "certified", "tolerance", "h", "step"):
        assert key in doc
    assert doc["transversality"][0]["index"] == 1


def test_certified_respects_tolerance():
    p = problem("v1^2 + z", right=(E1,))
    x, z = run(p, ["t*(exp(1)-1)"])
    rep = el_residual(p, x, z)
    assert not rep.certified
    assert rep.with_tolerance(10.0).certified


def test_vector_problem_decouples():
    p2 = HerglotzProblem.build("v1^2 + sin(x1) + v2^2*t", 0.0, 1.0, [0.0, 0.0], [1.0, 2.0], 0.01, 0.02)
    p1 = problem("v1^2 + sin(x1)")
    x2, z2 = run(p2, ["t^2", "2*t"])
    x1, z1 = run(p1, ["t^2"])
    r2 = el_residual(p2, x2, z2).residual[0].values
    r1 = el_residual(p1, x1, z1).residual[0].values
    assert np.max(np.abs(r2 - r1)) <= 1e-12


# -- transversality -----------------------------------------------------------

def test_transversality_constant_trajectory():
    p = problem("v1^2", left=(0.3,), right=(None,))
    x, z = run(p, ["0.3"])
    assert transversality_residual(p, x, z) == {1: 0j}


def test_transversality_of_v1_is_one():
    p = problem("v1", right=(None,))
    x, z = run(p, ["t^2"])
    assert transversality_residual(p, x, z)[1] == 1


def test_transversality_needs_free_end():
    p = problem("v1^2")
    x, z = run(p, ["t"])
    with pytest.raises(NoFreeBoundary):
        transversality_residual(p, x, z)


# -- classical reduction ------------------------------------------------------

def test_reduction_examples():
    assert classical_reduction_check(problem("0"), problem("0").trajectory(["t"])) == 0
    p = problem("v1^2", z_a=3.0)
    x, z = run(p, ["t"])
    assert abs(z.terminal - 4) <= 1e-6
    assert classical_reduction_check(p, x) <= 1e-6
    p = problem("t")
    _, z = run(p, ["t"])
    assert abs(z.terminal - 0.5) <= 1e-8


def test_reduction_needs_z_free():
    p = problem("v1^2 + z")
    with pytest.raises(NotZFree):
        classical_reduction_check(p, p.trajectory(["t"]))


# -- gradient -----------------------------------------------------------------

def _fd_gradient(p, x, node, eps=1e-5):
    arr = x.array
    out = []
    for sgn in (1, -1):
        a = arr.copy()
        a[0, node] += sgn * eps
        out.append(integrate_z(p, Trajectory.from_array(x.grid, a)).terminal.real)
    return (out[0] - out[1]) / (2 * eps)


def test_gradient_of_x1_is_step():
    p = problem("x1")
    x = p.trajectory(["t"])
    g = terminal_gradient(p, x)
    assert np.allclose(g[0, 5:-5], 0.01, rtol=1e-10)
    assert g[0, 0] == 0 and g[0, -1] == 0


def test_gradient_of_straight_line_vanishes_inside():
    p = problem("v1^2")
    g = terminal_gradient(p, p.trajectory(["t"]))
    # nodes within h of an end also move box x outside [a, b], which z(b) does not see
    hn = p.scale.h_nodes
    assert np.max(np.abs(g[0, 2 * hn:-2 * hn])) <= 1e-10


def test_gradient_matches_finite_differences():
    p = problem("v1^2 + z", right=(E1,))
    x = p.trajectory(["exp(t)-1 + 0.3*t*(1-t)*cos(4*t)"])
    g = terminal_gradient(p, x)
    ia = x.grid.ia
    for j in (5, 20, 50, 77, 95):
        fd = _fd_gradient(p, x, ia + j)
        assert g[0, j] == pytest.approx(fd, rel=5e-2)


def test_gradient_free_end_entry():
    p = problem("v1^2 + z", right=(None,))
    x = p.trajectory(["0.5*t"])
    g = terminal_gradient(p, x)
    fd = _fd_gradient(p, x, x.grid.ib)
    assert g[0, -1] == pytest.approx(fd, rel=5e-2)
