"""First-order Herglotz problems: z along a trajectory, the weight lambda and residuals.

A problem asks for a real trajectory ``x`` on ``[a, b]`` that makes the
terminal value ``z(b)`` of

    z'(t) = L(t, x(t), box x(t), z(t)),    z(a) = z_a

stationary, where ``box`` is the complex h-scale derivative.  Everything here
works on uniform grids whose margins carry the extra samples the scale
derivative consumes.  Internally the pipeline operates on plain arrays with
optional leading batch axes so the solver can evaluate many trajectories at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from herglotz.errors import (
    GridMismatch,
    InsufficientMargin,
    NoFreeBoundary,
    NotZFree,
    ProblemError,
)
from herglotz.expr import Compiled, parse
from herglotz.lagrangian import LagrangianSpec, first_order_alphabet
from herglotz.scale import Kind, Mode, SampledSignal, ScaleParams, UniformGrid, box_derivative, box_values


# -- grid helpers shared by every variant ------------------------------------

def cubic_midpoints(values: np.ndarray) -> np.ndarray:
    """Values halfway between consecutive nodes along the last axis.

    Interior midpoints use the centred four-point weights (-1, 9, 9, -1)/16;
    the first and last use the one-sided cubic through the four end nodes.
    """
    v = np.asarray(values)
    k = v.shape[-1]
    if k < 2:
        return v[..., :0]
    if k < 4:
        return 0.5 * (v[..., 1:] + v[..., :-1])
    out = np.empty(v.shape[:-1] + (k - 1,), dtype=np.result_type(v, float))
    out[..., 1:-1] = (9.0 * (v[..., 1:-2] + v[..., 2:-1]) - (v[..., :-3] + v[..., 3:])) / 16.0
    out[..., 0] = (5.0 * v[..., 0] + 15.0 * v[..., 1] - 5.0 * v[..., 2] + v[..., 3]) / 16.0
    out[..., -1] = (v[..., -4] - 5.0 * v[..., -3] + 15.0 * v[..., -2] + 5.0 * v[..., -1]) / 16.0
    return out


def rk4_path(rhs: Callable, z0, start: int, count: int, step: float) -> np.ndarray:
    """Classical RK4 across ``count`` nodes, starting from node ``start``.

    ``rhs(k, z)`` returns the right-hand side at node ``k``; half-integer
    positions are passed as ``k + 0.5`` and the callback interpolates.  The
    path is advanced forward to the last node and backward to node 0.
    Returns an array of shape ``z0.shape + (count,)``.
    """
    z0 = np.asarray(z0, dtype=complex)
    out = np.empty(z0.shape + (count,), dtype=complex)
    out[..., start] = z0
    with np.errstate(over="ignore", invalid="ignore"):
        _rk4_sweeps(rhs, z0, start, count, step, out)
    return out


def _rk4_sweeps(rhs, z0, start, count, step, out):
    for sign, stop in ((1, count - 1), (-1, 0)):
        z = z0
        dt = sign * step
        k = start
        while k != stop:
            mid = k + 0.5 * sign
            nxt = k + sign
            k1 = rhs(k, z)
            k2 = rhs(mid, z + 0.5 * dt * k1)
            k3 = rhs(mid, z + 0.5 * dt * k2)
            k4 = rhs(nxt, z + dt * k3)
            z = z + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            out[..., nxt] = z
            k = nxt


def cumulative_trapezoid(values: np.ndarray, start: int, step: float) -> np.ndarray:
    """Running trapezoid integral along the last axis, zero at node ``start``."""
    v = np.asarray(values, dtype=complex)
    pieces = 0.5 * step * (v[..., 1:] + v[..., :-1])
    out = np.zeros_like(v)
    out[..., start + 1:] = np.cumsum(pieces[..., start:], axis=-1)
    if start > 0:
        out[..., :start] = -np.cumsum(pieces[..., :start][..., ::-1], axis=-1)[..., ::-1]
    return out


def rk4_node_weights(count: int, ia: int, ib: int, step: float) -> np.ndarray:
    """Weight of each node value of the integrand in one RK4 sweep from ``ia`` to ``ib``.

    With cubic midpoints this is the trapezoid rule plus corrections of
    ``step/24`` next to each end (reaching one node past ``[a, b]`` when
    margins exist), so it is the exact first variation of the discrete
    terminal value with respect to the integrand.
    """
    mids = cubic_midpoints(np.eye(count))[:, ia:ib]
    w = (4.0 * step / 6.0) * mids.sum(axis=1)
    w[ia:ib] += step / 6.0
    w[ia + 1:ib + 1] += step / 6.0
    return w


def trapezoid_weights(count: int, step: float) -> np.ndarray:
    w = np.full(count, step)
    w[0] = w[-1] = 0.5 * step
    return w


def simpson_weights(count: int, step: float) -> np.ndarray:
    """Composite Simpson weights; an odd interval count ends with a 3/8 panel."""
    intervals = count - 1
    if intervals < 2:
        return trapezoid_weights(count, step)
    w = np.zeros(count)
    even = intervals if intervals % 2 == 0 else intervals - 3
    if even:
        w[:even + 1] = 2.0
        w[1:even:2] = 4.0
        w[0] = w[even] = 1.0
        w[:even + 1] *= step / 3
    if even != intervals:
        w[even:even + 4] += 3 * step / 8 * np.array([1.0, 3.0, 3.0, 1.0])
    return w


class NodeEnv:
    """Lagrangian arguments at the nodes of a grid, with lazy midpoint values."""

    def __init__(self, nodes: Mapping[str, np.ndarray], t: np.ndarray, step: float):
        self.nodes = dict(nodes)
        self.t = t
        self.step = step
        self.mid = {k: cubic_midpoints(v) for k, v in self.nodes.items()}
        self.t_mid = t[:-1] + 0.5 * step

    def at(self, k, z) -> dict:
        if isinstance(k, float):
            j = int(math.floor(k))
            env = {name: v[..., j] for name, v in self.mid.items()}
            env["t"] = self.t_mid[j]
        else:
            env = {name: v[..., k] for name, v in self.nodes.items()}
            env["t"] = self.t[k]
        env["z"] = z
        return env

    def full(self, z_path: np.ndarray) -> dict:
        env = dict(self.nodes)
        env["t"] = self.t
        env["z"] = z_path
        return env


# -- domain types ------------------------------------------------------------

@dataclass(frozen=True)
class Boundary:
    """Boundary data of one coordinate; ``right=None`` leaves ``x(b)`` free."""

    left: float
    right: float | None = None

    def __post_init__(self):
        if not math.isfinite(self.left) or (self.right is not None and not math.isfinite(self.right)):
            raise ProblemError("fixed boundary values must be finite")

    @property
    def free(self) -> bool:
        return self.right is None


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Real-valued components sampled on one grid (with margins)."""

    components: tuple[SampledSignal, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ProblemError("a trajectory needs at least one component")
        g = comps[0].grid
        for c in comps[1:]:
            if not c.grid.same_nodes(g) or c.grid.margin_left != g.margin_left:
                raise GridMismatch("trajectory components must share one grid")
        for c in comps:
            if not c.is_real:
                raise ProblemError("trajectory components must be real-valued")

    @classmethod
    def from_array(cls, grid: UniformGrid, values: np.ndarray) -> "Trajectory":
        arr = np.atleast_2d(np.asarray(values, dtype=float))
        return cls(tuple(SampledSignal(grid, row, Kind.REAL) for row in arr))

    @classmethod
    def from_functions(cls, grid: UniformGrid, funcs: Sequence[Callable]) -> "Trajectory":
        return cls.from_array(grid, np.array([np.real(f(grid.nodes)) for f in funcs], dtype=float))

    @classmethod
    def from_expressions(cls, grid: UniformGrid, texts: Sequence[str]) -> "Trajectory":
        """Sample expressions in ``t``; a nonzero imaginary part is an error."""
        rows = []
        for text in texts:
            vals = np.broadcast_to(Compiled(parse(text, {"t"}))({"t": grid.nodes}), grid.nodes.shape)
            if np.max(np.abs(vals.imag), initial=0.0) > 0:
                raise ProblemError(f"trajectory expression {text!r} is not real on the grid")
            rows.append(vals.real)
        return cls.from_array(grid, np.array(rows))

    @property
    def grid(self) -> UniformGrid:
        return self.components[0].grid

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def array(self) -> np.ndarray:
        return np.array([c.values.real for c in self.components])

    def __len__(self):
        return self.n

    def __getitem__(self, i) -> SampledSignal:
        return self.components[i]


def _validated_scale(scale: ScaleParams, a: float, b: float) -> ScaleParams:
    UniformGrid(a, b, scale.step)  # step must divide b - a
    return scale


@dataclass(frozen=True, eq=False)
class HerglotzProblem:
    """First-order problem for ``n`` coordinates."""

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
        if not self.boundaries:
            raise ProblemError("dimension must be at least 1")
        if tuple(self.lagrangian.arguments) != tuple(first_order_alphabet(self.n)):
            raise ProblemError(
                f"Lagrangian arguments {self.lagrangian.arguments} do not match dimension {self.n}")
        _validated_scale(self.scale, self.a, self.b)

    @classmethod
    def build(cls, lagrangian: str | LagrangianSpec, a: float, b: float,
              left: Sequence[float], right: Sequence[float | None],
              step: float, h: float, z_a: complex = 0j, ladder=None) -> "HerglotzProblem":
        """Convenience constructor from plain values."""
        if len(left) != len(right):
            raise ProblemError("left and right boundary lists differ in length")
        n = len(left)
        if isinstance(lagrangian, str):
            lagrangian = LagrangianSpec.first_order(lagrangian, n)
        scale = ScaleParams.from_h(step, h, ladder)
        bnd = tuple(Boundary(float(l), None if r is None else float(r)) for l, r in zip(left, right))
        return cls(a, b, lagrangian, bnd, scale, z_a)

    @property
    def n(self) -> int:
        return len(self.boundaries)

    @property
    def h(self) -> float:
        return self.scale.h

    @property
    def free_coordinates(self) -> tuple[int, ...]:
        """Zero-based indices of coordinates with a free right end."""
        return tuple(i for i, bd in enumerate(self.boundaries) if bd.free)

    def grid(self, margin_nodes: int | None = None) -> UniformGrid:
        """Grid over ``[a, b]``; the default margin is what the residual needs."""
        m = 2 * self.scale.h_nodes if margin_nodes is None else margin_nodes
        return UniformGrid(self.a, self.b, self.scale.step, m)

    def enforce(self, x: Trajectory) -> Trajectory:
        """Copy of ``x`` with every fixed boundary value written into its node."""
        self._check_grid(x)
        arr = x.array
        g = x.grid
        for i, bd in enumerate(self.boundaries):
            arr[i, g.ia] = bd.left
            if not bd.free:
                arr[i, g.ib] = bd.right
        return Trajectory.from_array(g, arr)

    def check(self, x: Trajectory) -> None:
        self._check_grid(x)
        g = x.grid
        for i, bd in enumerate(self.boundaries):
            vals = x[i].values.real
            if vals[g.ia] != bd.left or (not bd.free and vals[g.ib] != bd.right):
                raise ProblemError(f"trajectory violates the fixed boundary of x{i + 1}")

    def _check_grid(self, x: Trajectory) -> None:
        g = x.grid
        if x.n != self.n:
            raise ProblemError(f"trajectory has {x.n} components, problem has {self.n}")
        if not (math.isclose(g.a, self.a, abs_tol=1e-12) and math.isclose(g.b, self.b, abs_tol=1e-12)
                and math.isclose(g.step, self.scale.step, rel_tol=1e-12)):
            raise GridMismatch("trajectory grid does not match the problem interval and step")

    def trajectory(self, funcs: Sequence[Callable | str], margin_nodes: int | None = None) -> Trajectory:
        """Sample callables or ``t``-expressions and enforce the boundaries."""
        g = self.grid(margin_nodes)
        if all(isinstance(f, str) for f in funcs):
            x = Trajectory.from_expressions(g, funcs)
        else:
            x = Trajectory.from_functions(g, funcs)
        return self.enforce(x)


@dataclass(frozen=True, eq=False)
class ZSolution:
    """``z`` on the grid it was integrated over (``[a, b]`` plus any margins)."""

    z: SampledSignal
    terminal: complex
    im_diagnostic: float

    @classmethod
    def from_path(cls, grid: UniformGrid, path: np.ndarray) -> "ZSolution":
        sig = SampledSignal(grid, path)
        inner = path[grid.ia:grid.ib + 1]
        return cls(sig, complex(path[grid.ib]), float(np.max(np.abs(inner.imag))))

    @property
    def interior(self) -> SampledSignal:
        return self.z.restrict(0)


def _json_complex(c: complex) -> dict:
    return {"re": float(c.real), "im": float(c.imag)}


@dataclass(frozen=True, eq=False)
class ELReport:
    """Residual signals on ``[a, b]`` with their sup norms and boundary terms.

    ``certified`` holds when every sup norm and every transversality modulus
    is at most ``tolerance``.  ``barrow_defects`` record, per coordinate, how
    far the trapezoid integral of ``box(lambda p)`` is from ``[lambda p]_a^b``
    at the working ``h``; ``boundary_defects`` lists boundary conditions that
    cannot be written into nodes (higher-order problems).
    """

    residual: tuple[SampledSignal, ...]
    lam: SampledSignal
    transversality: dict[int, complex]
    tolerance: float
    h: float
    step: float
    barrow_defects: tuple[float, ...] = ()
    im_z: float = 0.0
    boundary_defects: dict[str, float] = field(default_factory=dict)

    @property
    def sup_norms(self) -> tuple[float, ...]:
        return tuple(float(np.max(np.abs(r.values))) for r in self.residual)

    @property
    def certified(self) -> bool:
        norms = list(self.sup_norms) + [abs(v) for v in self.transversality.values()]
        return all(v <= self.tolerance for v in norms)

    def with_tolerance(self, tolerance: float) -> "ELReport":
        return ELReport(self.residual, self.lam, self.transversality, tolerance, self.h,
                        self.step, self.barrow_defects, self.im_z, self.boundary_defects)

    def to_json(self) -> dict:
        return {
            "sup_norms": list(self.sup_norms),
            "transversality": [{"index": i, **_json_complex(v)}
                               for i, v in sorted(self.transversality.items())],
            "certified": self.certified,
            "tolerance": float(self.tolerance),
            "h": float(self.h),
            "step": float(self.step),
            "barrow_defects": [float(d) for d in self.barrow_defects],
            "max_abs_im_z": float(self.im_z),
            "boundary_defects": {k: float(v) for k, v in sorted(self.boundary_defects.items())},
        }


# -- the array pipeline ------------------------------------------------------

@dataclass
class FirstOrderState:
    """Everything derived from one (possibly batched) trajectory array.

    Arrays live on the common grid obtained by removing ``h_nodes`` from each
    end of the trajectory grid, where both ``x`` and ``box x`` are defined.
    """

    grid: UniformGrid
    env: NodeEnv
    z: np.ndarray

    @property
    def ia(self) -> int:
        return self.grid.ia

    @property
    def ib(self) -> int:
        return self.grid.ib


def first_order_env(problem: HerglotzProblem, grid: UniformGrid, X: np.ndarray):
    """Common grid and node arguments for a trajectory array of shape (..., n, M)."""
    hn = problem.scale.h_nodes
    if min(grid.margin_left, grid.margin_right) < hn:
        raise InsufficientMargin(f"trajectory needs at least {hn} margin nodes for the scale derivative")
    common = grid.shrink(hn, hn)
    V = box_values(X, hn, problem.h)
    xs = X[..., hn:X.shape[-1] - hn]
    nodes = {}
    for i in range(problem.n):
        nodes[f"x{i + 1}"] = xs[..., i, :]
        nodes[f"v{i + 1}"] = V[..., i, :]
    return common, NodeEnv(nodes, common.nodes, grid.step)


def run_first_order(problem: HerglotzProblem, grid: UniformGrid, X: np.ndarray) -> FirstOrderState:
    common, env = first_order_env(problem, grid, X)
    lag = problem.lagrangian
    z0 = np.full(X.shape[:-2], problem.z_a, dtype=complex)
    path = rk4_path(lambda k, z: lag.value(env.at(k, z)), z0, common.ia, common.node_count, grid.step)
    return FirstOrderState(common, env, path)


def lambda_path(lag: LagrangianSpec, state: FirstOrderState) -> np.ndarray:
    if lag.is_zero("z"):
        return np.ones(state.z.shape, dtype=complex)
    lz = lag.partial("z", state.env.full(state.z))
    return np.exp(-cumulative_trapezoid(lz, state.ia, state.grid.step))


def gradient_all(problem: HerglotzProblem, grid: UniformGrid, X: np.ndarray,
                 state: FirstOrderState | None = None) -> np.ndarray:
    """First variation of ``Re z(b)`` with respect to every node value of ``X``.

    Uses the integral identity ``lambda(b) dz(b) = int lambda (L_x eta + L_v box eta)``
    for unit node perturbations ``eta``, whose scale derivative is exact on
    the grid.  The integral is taken with the node weights of the RK4 sweep
    (:func:`rk4_node_weights`), so the result is consistent with the discrete
    objective up to the second-order effect of ``z`` on the stages.  Output
    shape matches ``X``.
    """
    if state is None:
        state = run_first_order(problem, grid, X)
    lag = problem.lagrangian
    hn = problem.scale.h_nodes
    h = problem.h
    full = state.env.full(state.z)
    lam = lambda_path(lag, state)
    K = state.grid.node_count
    w = rk4_node_weights(K, state.ia, state.ib, grid.step)
    lam_b = lam[..., state.ib]
    out = np.zeros(X.shape, dtype=complex)
    for i in range(problem.n):
        lx = lag.partial(f"x{i + 1}", full)
        lv = lag.partial(f"v{i + 1}", full)
        q = w * lam * lv
        # common node c is trajectory node c + hn; padding q by 2 hn zeros on
        # each side lets q_{j-hn}, q_j, q_{j+hn} be read as plain slices
        M = K + 2 * hn
        qp = np.zeros(q.shape[:-1] + (K + 4 * hn,), dtype=complex)
        qp[..., 2 * hn:2 * hn + K] = q
        q_minus, q_mid, q_plus = qp[..., :M], qp[..., hn:hn + M], qp[..., 2 * hn:2 * hn + M]
        direct = np.zeros(q.shape[:-1] + (M,), dtype=complex)
        direct[..., hn:hn + K] = w * lam * lx
        g = direct + (q_minus - q_plus + 1j * (q_minus - 2.0 * q_mid + q_plus)) / (2.0 * h)
        out[..., i, :] = g / lam_b[..., None]
    return out.real


# -- public operations -------------------------------------------------------

def _state(problem: HerglotzProblem, x: Trajectory) -> FirstOrderState:
    problem.check(x)
    return run_first_order(problem, x.grid, x.array)


def integrate_z(problem: HerglotzProblem, x: Trajectory) -> ZSolution:
    """Integrate ``z' = L(t, x, box x, z)`` by RK4 at the grid step.

    ``z`` is computed on ``[a, b]`` and on whatever margin remains after the
    scale derivative, integrating backward from ``a`` into the left margin.
    """
    st = _state(problem, x)
    return ZSolution.from_path(st.grid, st.z)


def _check_z(x: Trajectory, z: ZSolution, hn: int) -> None:
    zg, xg = z.z.grid, x.grid
    if (zg.margin_left, zg.margin_right) != (xg.margin_left - hn, xg.margin_right - hn) \
            or zg.intervals != xg.intervals or zg.step != xg.step:
        raise GridMismatch("z was not computed for this trajectory")


def lambda_weight(problem: HerglotzProblem, x: Trajectory, z: ZSolution) -> SampledSignal:
    """``exp(-int_a^t dL/dz)`` by cumulative trapezoid quadrature; equals 1 at ``a``."""
    problem.check(x)
    hn = problem.scale.h_nodes
    _check_z(x, z, hn)
    common, env = first_order_env(problem, x.grid, x.array)
    st = FirstOrderState(common, env, z.z.values)
    return SampledSignal(common, lambda_path(problem.lagrangian, st))


def _momenta(problem: HerglotzProblem, st: FirstOrderState) -> list[np.ndarray]:
    full = st.env.full(st.z)
    return [problem.lagrangian.partial(f"v{i + 1}", full) for i in range(problem.n)]


def el_residual(problem: HerglotzProblem, x: Trajectory, z: ZSolution,
                tolerance: float = 5e-2, mode: Mode | str = Mode.FIXED_H) -> ELReport:
    """Residual ``box p_i - dL/dx_i - dL/dz p_i`` on ``[a, b]``, with ``p_i = dL/dv_i``.

    Needs ``p_i`` on ``[a - h, b + h]``, hence trajectory margins of at least
    ``2 h_nodes``.  ``mode="extrapolated"`` replaces the fixed-h derivative of
    ``p_i`` by the ladder extrapolation (larger margins required).
    """
    problem.check(x)
    hn = problem.scale.h_nodes
    _check_z(x, z, hn)
    g = x.grid
    if min(g.margin_left, g.margin_right) < 2 * hn:
        raise InsufficientMargin(f"the residual needs {2 * hn} margin nodes on each side")
    common, env = first_order_env(problem, g, x.array)
    st = FirstOrderState(common, env, z.z.values)
    lag = problem.lagrangian
    full = env.full(st.z)
    lam = lambda_path(lag, st)
    lz = lag.partial("z", full)
    ps = _momenta(problem, st)
    lo, hi = common.ia, common.ib + 1
    residuals, barrow = [], []
    for i, p in enumerate(ps):
        bp, _ = box_derivative(SampledSignal(common, p), problem.scale, mode)
        bp = bp.restrict(0).values
        lx = lag.partial(f"x{i + 1}", full)
        res = bp - lx[lo:hi] - lz[lo:hi] * p[lo:hi]
        residuals.append(SampledSignal(g.with_margins(0), res))
        lp = SampledSignal(common, lam * p)
        blp = box_values(lp.values, hn, problem.h)[common.ia - hn:common.ib - hn + 1]
        integral = np.sum(trapezoid_weights(len(blp), g.step) * blp)
        barrow.append(abs(integral - (lp.values[common.ib] - lp.values[common.ia])))
    trans = {i + 1: complex(ps[i][common.ib]) for i in problem.free_coordinates}
    return ELReport(tuple(residuals), SampledSignal(common, lam), trans, tolerance,
                    problem.h, g.step, tuple(barrow), z.im_diagnostic)


def transversality_residual(problem: HerglotzProblem, x: Trajectory, z: ZSolution) -> dict[int, complex]:
    """``dL/dv_i`` at ``t = b`` for every coordinate with a free right end (1-based keys)."""
    if not problem.free_coordinates:
        raise NoFreeBoundary("every coordinate has a fixed right boundary")
    problem.check(x)
    _check_z(x, z, problem.scale.h_nodes)
    common, env = first_order_env(problem, x.grid, x.array)
    ps = _momenta(problem, FirstOrderState(common, env, z.z.values))
    return {i + 1: complex(ps[i][common.ib]) for i in problem.free_coordinates}


def classical_reduction_check(problem: HerglotzProblem, x: Trajectory) -> float:
    """``|z(b) - (int_a^b L dt + z_a)|`` for a Lagrangian that does not involve ``z``."""
    lag = problem.lagrangian
    if not lag.is_zero("z"):
        raise NotZFree("dL/dz is not identically zero")
    st = _state(problem, x)
    vals = lag.value(st.env.full(st.z))[st.ia:st.ib + 1]
    integral = np.sum(simpson_weights(len(vals), problem.scale.step) * vals)
    return float(abs(st.z[st.ib] - (integral + problem.z_a)))


def terminal_gradient(problem: HerglotzProblem, x: Trajectory) -> np.ndarray:
    """Gradient of ``Re z(b)`` along unit node perturbations on ``[a, b]``.

    Returns an ``(n, N + 1)`` array over the nodes of ``[a, b]``.  Entries at
    fixed boundary nodes are zero; a free right end gets its own entry.
    """
    problem.check(x)
    g = x.grid
    full = gradient_all(problem, g, x.array)[:, g.ia:g.ib + 1].copy()
    for i, bd in enumerate(problem.boundaries):
        full[i, 0] = 0.0
        if not bd.free:
            full[i, -1] = 0.0
    return full
