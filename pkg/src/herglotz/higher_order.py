"""Herglotz problems whose Lagrangian involves iterated scale derivatives up to order n.

The Lagrangian arguments are ``t, x1, v1_1, ..., v1_n, z`` where ``v1_k``
stands for the k-fold scale derivative of ``x``.  The necessary condition
checked here keeps the weight ``lambda`` inside the iterated derivatives:

    lambda L_x + sum_{i=1..n} (-1)^i box^i(lambda L_{v1_i}) = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from herglotz.core import (
    Boundary,
    ELReport,
    NodeEnv,
    Trajectory,
    ZSolution,
    cumulative_trapezoid,
    rk4_path,
)
from herglotz.errors import GridMismatch, InsufficientMargin, NoFreeBoundary, ProblemError
from herglotz.lagrangian import LagrangianSpec, higher_order_alphabet
from herglotz.scale import SampledSignal, ScaleParams, UniformGrid, box_values


@dataclass(frozen=True, eq=False)
class HigherOrderProblem:
    """Scalar problem of order ``n``.

    ``boundaries[i]`` holds the data of the i-th scale derivative of ``x`` at
    ``a`` and ``b`` (``right=None`` for a free end).  Only the ``i = 0`` values
    can be written into trajectory nodes; the others are reported as defects.
    """

    a: float
    b: float
    lagrangian: LagrangianSpec
    boundaries: tuple[Boundary, ...]
    scale: ScaleParams
    z_a: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "boundaries", tuple(self.boundaries))
        object.__setattr__(self, "z_a", complex(self.z_a))
        if not self.a < self.b:
            raise ProblemError("interval must satisfy a < b")
        if self.order < 1:
            raise ProblemError("order must be at least 1")
        if tuple(self.lagrangian.arguments) != tuple(higher_order_alphabet(self.order)):
            raise ProblemError(
                f"Lagrangian arguments {self.lagrangian.arguments} do not match order {self.order}")
        UniformGrid(self.a, self.b, self.scale.step)

    @classmethod
    def build(cls, lagrangian: str | LagrangianSpec, a: float, b: float, left, right,
              step: float, h: float, z_a: complex = 0j, ladder=None) -> "HigherOrderProblem":
        if len(left) != len(right):
            raise ProblemError("left and right boundary lists differ in length")
        order = len(left)
        if isinstance(lagrangian, str):
            lagrangian = LagrangianSpec.higher_order(lagrangian, order)
        bnd = tuple(Boundary(float(l), None if r is None else float(r)) for l, r in zip(left, right))
        return cls(a, b, lagrangian, bnd, ScaleParams.from_h(step, h, ladder), z_a)

    @property
    def order(self) -> int:
        return len(self.boundaries)

    @property
    def h(self) -> float:
        return self.scale.h

    def grid(self, margin_nodes: int | None = None) -> UniformGrid:
        m = 2 * self.order * self.scale.h_nodes if margin_nodes is None else margin_nodes
        return UniformGrid(self.a, self.b, self.scale.step, m)

    def _check_grid(self, x: Trajectory) -> None:
        g = x.grid
        if x.n != 1:
            raise ProblemError("higher-order problems take a single component")
        if not (math.isclose(g.a, self.a, abs_tol=1e-12) and math.isclose(g.b, self.b, abs_tol=1e-12)
                and math.isclose(g.step, self.scale.step, rel_tol=1e-12)):
            raise GridMismatch("trajectory grid does not match the problem interval and step")

    def enforce(self, x: Trajectory) -> Trajectory:
        self._check_grid(x)
        arr = x.array
        g = x.grid
        bd = self.boundaries[0]
        arr[0, g.ia] = bd.left
        if not bd.free:
            arr[0, g.ib] = bd.right
        return Trajectory.from_array(g, arr)

    def check(self, x: Trajectory) -> None:
        self._check_grid(x)
        vals = x[0].values.real
        bd = self.boundaries[0]
        if vals[x.grid.ia] != bd.left or (not bd.free and vals[x.grid.ib] != bd.right):
            raise ProblemError("trajectory violates the fixed boundary of x1")

    def trajectory(self, func, margin_nodes: int | None = None) -> Trajectory:
        g = self.grid(margin_nodes)
        if isinstance(func, str):
            x = Trajectory.from_expressions(g, [func])
        else:
            x = Trajectory.from_functions(g, [func])
        return self.enforce(x)


def _derivative_stack(problem: HigherOrderProblem, x: Trajectory):
    """Common grid and node arguments ``x1, v1_1..v1_n``, all on margin ``m - n hn``."""
    problem.check(x)
    n, hn = problem.order, problem.scale.h_nodes
    g = x.grid
    if min(g.margin_left, g.margin_right) < n * hn:
        raise InsufficientMargin(f"order {n} needs {n * hn} margin nodes on each side")
    common = g.shrink(n * hn, n * hn)
    cur = x[0].values.astype(complex)
    nodes = {"x1": cur[n * hn:len(cur) - n * hn]}
    for k in range(1, n + 1):
        cur = box_values(cur, hn, problem.h)
        trim = (n - k) * hn
        nodes[f"v1_{k}"] = cur[trim:len(cur) - trim]
    return common, NodeEnv(nodes, common.nodes, g.step)


def _z_path(problem: HigherOrderProblem, common: UniformGrid, env: NodeEnv) -> np.ndarray:
    lag = problem.lagrangian
    return rk4_path(lambda k, z: lag.value(env.at(k, z)), problem.z_a, common.ia,
                    common.node_count, common.step)


def integrate_z_ho(problem: HigherOrderProblem, x: Trajectory) -> ZSolution:
    """``z' = L(t, x, box x, ..., box^n x, z)`` by RK4; needs margins of ``n h_nodes``."""
    common, env = _derivative_stack(problem, x)
    return ZSolution.from_path(common, _z_path(problem, common, env))


def _weighted_partials(problem: HigherOrderProblem, x: Trajectory, z: ZSolution):
    common, env = _derivative_stack(problem, x)
    if not (z.z.grid.margin_left == common.margin_left and z.z.grid.intervals == common.intervals):
        raise GridMismatch("z was not computed for this trajectory")
    lag = problem.lagrangian
    full = env.full(z.z.values)
    if lag.is_zero("z"):
        lam = np.ones(common.node_count, dtype=complex)
    else:
        lam = np.exp(-cumulative_trapezoid(lag.partial("z", full), common.ia, common.step))
    lx = lag.partial("x1", full)
    lv = [lag.partial(f"v1_{k}", full) for k in range(1, problem.order + 1)]
    return common, env, lam, lx, lv


def _iterated_box(values: np.ndarray, times: int, hn: int, h: float) -> np.ndarray:
    out = values
    for _ in range(times):
        out = box_values(out, hn, h)
    return out


def _boundary_defects(problem: HigherOrderProblem, common: UniformGrid, env: NodeEnv) -> dict[str, float]:
    out = {}
    for i, bd in enumerate(problem.boundaries[1:], start=1):
        v = env.nodes[f"v1_{i}"]
        out[f"box{i}_a"] = float(abs(v[common.ia] - bd.left))
        if not bd.free:
            out[f"box{i}_b"] = float(abs(v[common.ib] - bd.right))
    return out


def el_residual_ho(problem: HigherOrderProblem, x: Trajectory, z: ZSolution,
                   tolerance: float = 5e-2) -> ELReport:
    """``lambda L_x + sum (-1)^i box^i(lambda L_{v1_i})`` on ``[a, b]``.

    Raises :class:`InsufficientMargin` unless the trajectory carries at least
    ``2 n h_nodes`` margin nodes on each side.
    """
    n, hn = problem.order, problem.scale.h_nodes
    g = x.grid
    if min(g.margin_left, g.margin_right) < 2 * n * hn:
        raise InsufficientMargin(f"order {n} residual needs {2 * n * hn} margin nodes on each side")
    common, env, lam, lx, lv = _weighted_partials(problem, x, z)
    lo, hi = common.ia, common.ib + 1
    res = lam[lo:hi] * lx[lo:hi]
    for i in range(1, n + 1):
        term = _iterated_box(lam * lv[i - 1], i, hn, problem.h)
        off = common.margin_left - i * hn
        res = res + (-1) ** i * term[off:off + hi - lo]
    trans = {}
    if any(bd.free for bd in problem.boundaries):
        trans = _transversality(problem, common, lam, lv)
    return ELReport((SampledSignal(g.with_margins(0), res),), SampledSignal(common, lam), trans,
                    tolerance, problem.h, g.step, (), z.im_diagnostic,
                    _boundary_defects(problem, common, env))


def _transversality(problem, common, lam, lv) -> dict[int, complex]:
    n, hn = problem.order, problem.scale.h_nodes
    out = {}
    for i in range(1, n + 1):
        if not problem.boundaries[i - 1].free:
            continue
        total = 0j
        for k in range(i, n + 1):
            term = _iterated_box(lam * lv[k - 1], k - i, hn, problem.h)
            total += (-1) ** (k - i) * term[common.ib - (k - i) * hn]
        out[i] = complex(total)
    return out


def transversality_ho(problem: HigherOrderProblem, x: Trajectory, z: ZSolution) -> dict[int, complex]:
    """Boundary sums at ``t = b`` for each ``i`` whose ``box^(i-1) x(b)`` is free."""
    if not any(bd.free for bd in problem.boundaries):
        raise NoFreeBoundary("no right boundary of this problem is free")
    common, _, lam, _, lv = _weighted_partials(problem, x, z)
    return _transversality(problem, common, lam, lv)
