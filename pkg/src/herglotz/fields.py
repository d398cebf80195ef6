"""Herglotz problems with several independent variables.

A field ``u(t, s1, ..., sn)`` (n = 1 or 2 space axes) drives

    z'(t) = int_Omega L(t, s, u, box_t u, box_s1 u, ..., z(t)) ds,   z(a) = z_a

and the residual checked is

    L_u + L_ut int_Omega L_z ds - box_t(L_ut) - sum_i box_si(L_uxi)

at every node of the closed box ``[a, b] x Omega``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from herglotz.core import NodeEnv, ZSolution, cumulative_trapezoid, rk4_path, trapezoid_weights
from herglotz.errors import GridMismatch, InsufficientMargin, ProblemError
from herglotz.lagrangian import LagrangianSpec, field_alphabet
from herglotz.scale import FieldSamples, SampledSignal, UniformGrid, box_values
from herglotz.scale.grid import _as_int_ratio

MAX_SPACE_AXES = 2


@dataclass(frozen=True, eq=False)
class FieldProblem:
    """Time interval, space box, grid steps per axis and one shared scale ``h``.

    ``steps[0]`` is the time step and ``steps[1:]`` the space steps; ``h``
    must be an integer multiple of each of them.
    """

    a: float
    b: float
    space: tuple[tuple[float, float], ...]
    lagrangian: LagrangianSpec
    steps: tuple[float, ...]
    h: float
    z_a: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "space", tuple(tuple(map(float, s)) for s in self.space))
        object.__setattr__(self, "steps", tuple(map(float, self.steps)))
        object.__setattr__(self, "z_a", complex(self.z_a))
        if not self.a < self.b:
            raise ProblemError("time interval must satisfy a < b")
        if not 1 <= len(self.space) <= MAX_SPACE_AXES:
            raise ProblemError(f"between 1 and {MAX_SPACE_AXES} space axes are supported")
        if len(self.steps) != 1 + len(self.space):
            raise ProblemError("need one grid step per axis (time first)")
        if any(lo >= hi for lo, hi in self.space):
            raise ProblemError("every space interval must satisfy lo < hi")
        if tuple(self.lagrangian.arguments) != tuple(field_alphabet(len(self.space))):
            raise ProblemError("density arguments do not match the number of space axes")
        if not 0 < self.h < 1:
            raise ProblemError("h must lie in (0, 1)")
        for lo, hi, st in zip((self.a,) + tuple(s[0] for s in self.space),
                              (self.b,) + tuple(s[1] for s in self.space), self.steps):
            UniformGrid(lo, hi, st)
        self.h_nodes  # validates divisibility

    @classmethod
    def build(cls, density: str | LagrangianSpec, a: float, b: float,
              space: Sequence[tuple[float, float]], steps: Sequence[float], h: float,
              z_a: complex = 0j) -> "FieldProblem":
        if isinstance(density, str):
            density = LagrangianSpec.field(density, len(space))
        return cls(a, b, tuple(space), density, tuple(steps), h, z_a)

    @property
    def ndim(self) -> int:
        return len(self.space)

    @property
    def h_nodes(self) -> tuple[int, ...]:
        return tuple(_as_int_ratio(self.h, st, "h") for st in self.steps)

    @property
    def volume(self) -> float:
        return math.prod(hi - lo for lo, hi in self.space)

    def grids(self, margin_nodes: Sequence[int] | None = None) -> tuple[UniformGrid, ...]:
        """One grid per axis; the default margins are what the residual needs."""
        if margin_nodes is None:
            margin_nodes = [2 * hn for hn in self.h_nodes]
        bounds = [(self.a, self.b)] + list(self.space)
        return tuple(UniformGrid(lo, hi, st, m)
                     for (lo, hi), st, m in zip(bounds, self.steps, margin_nodes))

    def sample(self, func: Callable | str, margin_nodes: Sequence[int] | None = None) -> FieldSamples:
        """Sample ``func(t, s1, ...)`` or an expression in ``t, s1, ...``."""
        grids = self.grids(margin_nodes)
        if isinstance(func, str):
            from herglotz.expr import Compiled, parse
            names = ["t"] + [f"s{i + 1}" for i in range(self.ndim)]
            comp = Compiled(parse(func, set(names)))
            mesh = np.meshgrid(*[g.nodes for g in grids], indexing="ij")
            vals = np.broadcast_to(comp(dict(zip(names, mesh))), mesh[0].shape)
            if np.max(np.abs(vals.imag), initial=0.0) > 0:
                raise ProblemError("field expression is not real on the grid")
            return FieldSamples(grids, vals.real)
        return FieldSamples.from_function(grids, func)

    def check(self, u: FieldSamples) -> None:
        if u.ndim != 1 + self.ndim:
            raise ProblemError(f"field needs {1 + self.ndim} axes")
        bounds = [(self.a, self.b)] + list(self.space)
        for g, (lo, hi), st in zip(u.grids, bounds, self.steps):
            if not (math.isclose(g.a, lo, abs_tol=1e-12) and math.isclose(g.b, hi, abs_tol=1e-12)
                    and math.isclose(g.step, st, rel_tol=1e-12)):
                raise GridMismatch("field grids do not match the problem box and steps")


@dataclass(frozen=True, eq=False)
class FieldResidualReport:
    """Residual on the closed box ``[a, b] x Omega`` and its sup norm."""

    residual: FieldSamples
    lam: SampledSignal
    tolerance: float
    h: float
    steps: tuple[float, ...]

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.residual.values)))

    @property
    def sup_norms(self) -> tuple[float, ...]:
        return (self.sup_norm,)

    @property
    def certified(self) -> bool:
        return self.sup_norm <= self.tolerance

    def with_tolerance(self, tolerance: float) -> "FieldResidualReport":
        return FieldResidualReport(self.residual, self.lam, tolerance, self.h, self.steps)

    def to_json(self) -> dict:
        return {
            "sup_norms": [self.sup_norm],
            "transversality": [],
            "certified": self.certified,
            "tolerance": float(self.tolerance),
            "h": float(self.h),
            "step": float(self.steps[0]),
            "steps": [float(s) for s in self.steps],
        }


class _FieldState:
    """Density arguments on the region where every partial derivative exists.

    Arrays are stored with time as the last axis so the one-dimensional RK4
    machinery can slice them node by node.
    """

    def __init__(self, problem: FieldProblem, u: FieldSamples):
        problem.check(u)
        hns = problem.h_nodes
        for g, hn in zip(u.grids, hns):
            if min(g.margin_left, g.margin_right) < hn:
                raise InsufficientMargin(f"every axis needs at least {hn} margin nodes")
        vals = np.asarray(u.values, dtype=complex)
        self.grids = tuple(g.shrink(hn, hn) for g, hn in zip(u.grids, hns))
        core = tuple(slice(hn, vals.shape[ax] - hn) for ax, hn in enumerate(hns))
        args = {"u": vals[core]}
        for ax, hn in enumerate(hns):
            d = box_values(vals, hn, problem.h, axis=ax)
            sl = list(core)
            sl[ax] = slice(None)
            name = "ut" if ax == 0 else f"ux{ax}"
            args[name] = d[tuple(sl)]
        space_mesh = np.meshgrid(*[g.nodes for g in self.grids[1:]], indexing="ij")
        tshape = args["u"].shape
        for i, s in enumerate(space_mesh):
            args[f"s{i + 1}"] = np.broadcast_to(s[None], tshape)
        nodes = {k: np.moveaxis(v, 0, -1) for k, v in args.items()}
        tg = self.grids[0]
        self.env = NodeEnv(nodes, tg.nodes, tg.step)
        # trapezoid weights over Omega, zero in the spatial margins
        w = np.ones(())
        for g in self.grids[1:]:
            wi = np.zeros(g.node_count)
            wi[g.ia:g.ib + 1] = trapezoid_weights(g.intervals + 1, g.step)
            w = np.multiply.outer(w, wi)
        self.space_weights = w
        self.problem = problem

    def space_integral(self, values: np.ndarray) -> np.ndarray:
        """Integrate over Omega; ``values`` has space axes first, time last."""
        axes = tuple(range(self.space_weights.ndim))
        return np.tensordot(self.space_weights, values, axes=(axes, axes))

    def z_path(self) -> np.ndarray:
        lag = self.problem.lagrangian
        tg = self.grids[0]

        def rhs(k, z):
            return self.space_integral(lag.value(self.env.at(k, z)))

        return rk4_path(rhs, self.problem.z_a, tg.ia, tg.node_count, tg.step)

    def full(self, z: np.ndarray) -> dict:
        env = self.env.full(z)
        env["z"] = np.broadcast_to(z, env["u"].shape)
        return env


def integrate_z_field(problem: FieldProblem, u: FieldSamples) -> ZSolution:
    """RK4 in time of the spatial trapezoid integral of the density."""
    st = _FieldState(problem, u)
    return ZSolution.from_path(st.grids[0], st.z_path())


def _z_values(st: _FieldState, z: ZSolution) -> np.ndarray:
    tg = st.grids[0]
    if z.z.grid.margin_left != tg.margin_left or z.z.grid.intervals != tg.intervals:
        raise GridMismatch("z was not computed for this field")
    return z.z.values


def _coupling(st: _FieldState, z: np.ndarray) -> np.ndarray:
    lag = st.problem.lagrangian
    if lag.is_zero("z"):
        return np.zeros(st.grids[0].node_count, dtype=complex)
    return st.space_integral(lag.partial("z", st.full(z)))


def lambda_field(problem: FieldProblem, u: FieldSamples, z: ZSolution) -> SampledSignal:
    """``exp(-int_a^t int_Omega L_z)``, trapezoid in space and time; 1 at ``a``."""
    st = _FieldState(problem, u)
    zv = _z_values(st, z)
    tg = st.grids[0]
    return SampledSignal(tg, np.exp(-cumulative_trapezoid(_coupling(st, zv), tg.ia, tg.step)))


def el_residual_field(problem: FieldProblem, u: FieldSamples, z: ZSolution,
                      tolerance: float = 0.1) -> FieldResidualReport:
    """Field residual at every node of ``[a, b] x Omega``; needs ``2 h_nodes`` margins per axis."""
    for g, hn in zip(u.grids, problem.h_nodes):
        if min(g.margin_left, g.margin_right) < 2 * hn:
            raise InsufficientMargin(f"the field residual needs {2 * hn} margin nodes on every axis")
    st = _FieldState(problem, u)
    zv = _z_values(st, z)
    lag = problem.lagrangian
    full = st.full(zv)
    coupling = _coupling(st, zv)
    hns = problem.h_nodes
    # partials with time moved back to axis 0
    def part(name):
        return np.moveaxis(lag.partial(name, full), -1, 0)

    lu, lut = part("u"), part("ut")
    inner = tuple(slice(g.ia, g.ib + 1) for g in st.grids)
    res = lu[inner] + lut[inner] * coupling[inner[0]].reshape((-1,) + (1,) * problem.ndim)
    for ax, hn in enumerate(hns):
        name = "ut" if ax == 0 else f"ux{ax}"
        d = box_values(part(name), hn, problem.h, axis=ax)
        sl = list(inner)
        sl[ax] = slice(st.grids[ax].ia - hn, st.grids[ax].ib - hn + 1)
        res = res - d[tuple(sl)]
    tg = st.grids[0]
    lam = SampledSignal(tg, np.exp(-cumulative_trapezoid(coupling, tg.ia, tg.step)))
    grids = tuple(g.with_margins(0) for g in st.grids)
    return FieldResidualReport(FieldSamples(grids, res), lam, tolerance, problem.h, problem.steps)
