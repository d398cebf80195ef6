"""Direct extremization of ``Re z(b)`` over discretized first-order trajectories.

Unknowns are the node values of each coordinate on a core range that stays
``band`` nodes away from the ends of ``[a, b]``, plus ``x(b)`` when that end
is free.  The remaining nodes (the thin bands next to ``a`` and ``b`` and the
margins that the scale derivative needs) follow from the unknowns by
polynomial interpolation through the boundary value.  Treating every node as
free makes the discrete stationarity system nearly singular, because the
central scale derivative does not see oscillations of period ``2h``; closing
the bands this way removes those modes.

``stationary`` mode solves ``gradient = 0`` with a secant (Broyden) iteration
started from a finite-difference Jacobian; ``minimize`` and ``maximize`` run
gradient descent or ascent with Armijo backtracking.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from herglotz.core import (
    ELReport,
    HerglotzProblem,
    Trajectory,
    el_residual,
    gradient_all,
    integrate_z,
    run_first_order,
)
from herglotz.errors import EvaluationError, InsufficientMargin, LineSearchFailure, MaxIterationsExceeded, ProblemError


class SolveMode(enum.Enum):
    STATIONARY = "stationary"
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


@dataclass(frozen=True)
class SolveOptions:
    """Iteration limits, tolerances and backtracking parameters.

    ``band`` is the number of nodes next to each end that are slaved to the
    unknowns and ``degree`` the degree of the interpolating polynomial used
    for them.  ``None`` picks ``h_nodes + 2`` and 4 in stationary mode, where
    the wider band is what makes the system well posed, and 1 and 2 in the
    descent modes, where a thin band keeps the problem well conditioned.
    """

    max_iterations: int = 200
    gradient_tolerance: float = 1e-8
    initial_step: float = 1.0
    shrink: float = 0.5
    sufficient_decrease: float = 1e-4
    mode: SolveMode = SolveMode.STATIONARY
    certification_tolerance: float = 5e-2
    band: int | None = None
    degree: int | None = None
    jacobian_refresh: int = 20
    max_backtracks: int = 60

    def __post_init__(self):
        object.__setattr__(self, "mode", SolveMode(self.mode))
        if self.max_iterations < 1:
            raise ProblemError("max_iterations must be positive")
        if not (self.gradient_tolerance > 0 and self.certification_tolerance > 0):
            raise ProblemError("tolerances must be positive")
        if not 0 < self.shrink < 1:
            raise ProblemError("shrink factor must lie in (0, 1)")
        if not (self.initial_step > 0 and 0 < self.sufficient_decrease < 1):
            raise ProblemError("initial step must be positive and sufficient decrease in (0, 1)")
        if (self.degree is not None and self.degree < 1) or (self.band is not None and self.band < 1):
            raise ProblemError("band and degree must be positive")


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    objective: complex
    grad_norm: float
    step: float


@dataclass(frozen=True, eq=False)
class SolveResult:
    trajectory: Trajectory
    report: ELReport
    trace: tuple[TraceRow, ...]
    converged: bool

    @property
    def certified(self) -> bool:
        return self.converged and self.report.certified

    @property
    def objective(self) -> complex:
        return self.trace[-1].objective if self.trace else complex("nan")


def lagrange_weights(xs: np.ndarray, xq: float) -> np.ndarray:
    """Weights of the interpolating polynomial through ``xs`` evaluated at ``xq``."""
    xs = np.asarray(xs, dtype=float)
    w = np.ones(len(xs))
    for l in range(len(xs)):
        for m in range(len(xs)):
            if m != l:
                w[l] *= (xq - xs[m]) / (xs[l] - xs[m])
    return w


@dataclass
class Closure:
    """Affine map ``X = T y + c`` from unknowns to the full trajectory array."""

    T: np.ndarray          # (n, M, K) with K the total number of unknowns
    c: np.ndarray          # (n, M)
    equations: list[tuple[int, int]]   # (coordinate, node) pairs, one per unknown
    y0: np.ndarray

    def expand(self, y: np.ndarray) -> np.ndarray:
        return np.einsum("imk,...k->...im", self.T, y) + self.c

    def restrict(self, G: np.ndarray) -> np.ndarray:
        """Stationarity equations: gradient entries at the unknown nodes."""
        idx_i = [i for i, _ in self.equations]
        idx_j = [j for _, j in self.equations]
        return G[..., idx_i, idx_j]

    def reduce(self, G: np.ndarray) -> np.ndarray:
        """Gradient with respect to ``y`` (chain rule through the closure)."""
        return np.einsum("imk,...im->...k", self.T, G)


def build_closure(problem: HerglotzProblem, x: Trajectory, band: int, degree: int) -> Closure:
    g = x.grid
    arr = x.array
    M = g.node_count
    ia, ib = g.ia, g.ib
    lo, hi = ia + band, ib - band
    if hi - lo + 1 < degree + 1:
        raise ProblemError("grid too coarse for the requested band and degree")
    blocks = []
    for i, bd in enumerate(problem.boundaries):
        core = list(range(lo, hi + 1))
        unknowns = core + ([ib] if bd.free else [])
        blocks.append((i, bd, core, unknowns))
    K = sum(len(b[3]) for b in blocks)
    T = np.zeros((problem.n, M, K))
    c = np.zeros((problem.n, M))
    y0 = np.zeros(K)
    equations = []
    col = 0
    for i, bd, core, unknowns in blocks:
        cols = {j: col + k for k, j in enumerate(unknowns)}
        for j, kk in cols.items():
            T[i, j, kk] = 1.0
            y0[kk] = arr[i, j]
            equations.append((i, j))
        c[i, ia] = bd.left
        if not bd.free:
            c[i, ib] = bd.right
        left_stencil = [ia] + core[:degree]
        right_stencil = core[-degree:] + [ib]
        for j in list(range(0, ia)) + list(range(ia + 1, lo)):
            w = lagrange_weights(left_stencil, j)
            T[i, j] = w @ T[i, left_stencil]
            c[i, j] = w @ c[i, left_stencil]
        for j in list(range(hi + 1, ib)) + list(range(ib + 1, M)):
            w = lagrange_weights(right_stencil, j)
            T[i, j] = w @ T[i, right_stencil]
            c[i, j] = w @ c[i, right_stencil]
        col += len(unknowns)
    return Closure(T, c, equations, y0)


class _Objective:
    """Batched evaluation of ``z(b)`` and the gradient through a closure."""

    def __init__(self, problem: HerglotzProblem, grid, closure: Closure):
        self.problem = problem
        self.grid = grid
        self.closure = closure

    def value(self, y: np.ndarray) -> np.ndarray:
        st = run_first_order(self.problem, self.grid, self.closure.expand(y))
        return st.z[..., st.ib]

    def gradient(self, y: np.ndarray):
        X = self.closure.expand(y)
        st = run_first_order(self.problem, self.grid, X)
        return st.z[..., st.ib], gradient_all(self.problem, self.grid, X, st)

    def equations(self, y: np.ndarray):
        zb, G = self.gradient(y)
        return zb, self.closure.restrict(G)

    def fd_gradient(self, y: np.ndarray) -> np.ndarray:
        """Central differences of ``Re z(b)`` with respect to ``y``, one batch per call."""
        K = len(y)
        eps = 1e-6 * np.maximum(1.0, np.abs(y))
        E = np.diag(eps)
        vals = self.value(np.concatenate([y + E, y - E])).real
        return (vals[:K] - vals[K:]) / (2.0 * eps)

    def jacobian(self, y: np.ndarray) -> np.ndarray:
        """Central finite-difference Jacobian of the equations, one batch per call."""
        K = len(y)
        eps = 1e-6 * np.maximum(1.0, np.abs(y))
        E = np.diag(eps)
        batch = np.concatenate([y + E, y - E])
        _, F = self.equations(batch)
        return ((F[:K] - F[K:]) / (2.0 * eps[:, None])).T


def _finish(problem, grid, closure, y, trace, converged, options) -> SolveResult:
    x = Trajectory.from_array(grid, closure.expand(y))
    report = el_residual(problem, x, integrate_z(problem, x), options.certification_tolerance)
    return SolveResult(x, report, tuple(trace), converged)


def _stationary(obj: _Objective, y: np.ndarray, options: SolveOptions):
    trace = []
    zb, F = obj.equations(y)
    norm = float(np.linalg.norm(F))
    trace.append(TraceRow(0, complex(zb), norm, 0.0))
    best = (norm, y.copy(), list(trace))
    J = obj.jacobian(y)
    since_refresh = 0
    for it in range(1, options.max_iterations + 1):
        if norm <= options.gradient_tolerance:
            return y, trace, True
        try:
            d = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            d = np.linalg.lstsq(J, -F, rcond=None)[0]
        alpha = options.initial_step
        merit = 0.5 * norm ** 2
        accepted = False
        for _ in range(options.max_backtracks):
            y_new = y + alpha * d
            try:
                zb_new, F_new = obj.equations(y_new)
            except EvaluationError:
                alpha *= options.shrink
                continue
            norm_new = float(np.linalg.norm(F_new))
            if 0.5 * norm_new ** 2 <= (1.0 - 2.0 * options.sufficient_decrease * alpha) * merit:
                accepted = True
                break
            alpha *= options.shrink
        if not accepted:
            if since_refresh == 0:
                raise LineSearchFailure("no acceptable step along the quasi-Newton direction")
            J = obj.jacobian(y)      # secant model went stale: rebuild and retry
            since_refresh = 0
            continue
        s = y_new - y
        dF = F_new - F
        y, F, norm, zb = y_new, F_new, norm_new, zb_new
        trace.append(TraceRow(it, complex(zb), norm, alpha))
        if norm < best[0]:
            best = (norm, y.copy(), list(trace))
        since_refresh += 1
        if since_refresh >= options.jacobian_refresh:
            J = obj.jacobian(y)
            since_refresh = 0
        else:
            J = J + np.outer(dF - J @ s, s) / (s @ s)
    if norm <= options.gradient_tolerance:
        return y, trace, True
    return best[1], best[2], False


def _descent(obj: _Objective, y: np.ndarray, options: SolveOptions):
    """Gradient descent (or ascent) with Armijo backtracking on ``Re z(b)``.

    Directions come from the variation-rate formula.  That formula is only
    consistent with the discrete objective up to discretization error, so
    when backtracking along it fails the iteration switches for good to
    central differences of the discrete objective.
    """
    sign = 1.0 if options.mode is SolveMode.MINIMIZE else -1.0
    exact = False

    def direction(y):
        if exact:
            zb = obj.value(y)
            return zb, obj.fd_gradient(y)
        zb, G = obj.gradient(y)
        return zb, obj.closure.reduce(G)

    def search(y, f, r, alpha):
        with np.errstate(over="ignore"):
            slope = float(r @ r)
        floor = 1e-13 * (1.0 + float(np.linalg.norm(y)))
        for _ in range(options.max_backtracks):
            if alpha * np.sqrt(slope) <= floor:
                break      # steps this short only move y by rounding
            y_new = y - sign * alpha * r
            try:
                f_new = sign * obj.value(y_new).real
            except EvaluationError:
                f_new = np.inf     # overshot into a region where L is undefined
            # strict decrease too, so steps lost in rounding do not count as progress
            if f_new < f and f_new <= f - options.sufficient_decrease * alpha * slope:
                return y_new, alpha
            alpha *= options.shrink
        return None, alpha

    trace = []
    zb, r = direction(y)
    f = sign * zb.real
    norm = float(np.linalg.norm(r))
    trace.append(TraceRow(0, complex(zb), norm, 0.0))
    best = (f, y.copy(), list(trace))
    trial = options.initial_step
    for it in range(1, options.max_iterations + 1):
        if norm <= options.gradient_tolerance:
            return y, trace, True
        y_new, alpha = search(y, f, r, trial)
        if y_new is None and not exact:
            exact = True
            zb, r = direction(y)
            norm = float(np.linalg.norm(r))
            if norm <= options.gradient_tolerance:
                return y, trace, True
            y_new, alpha = search(y, f, r, options.initial_step)
        if y_new is None:
            raise LineSearchFailure("backtracking found no sufficient decrease")
        try:
            zb, r_new = direction(y_new)
        except EvaluationError:
            zb, r_new = np.nan, None
        if r_new is None or not (np.isfinite(zb) and np.all(np.isfinite(r_new))):
            raise LineSearchFailure("objective overflowed; the discrete problem looks unbounded in this direction")
        s, dr = y_new - y, r_new - r
        # Barzilai-Borwein length as the next trial step; backtracking keeps descent monotone
        curv = sign * float(s @ dr)
        trial = float(s @ s) / curv if curv > 0 else options.initial_step
        y, r, f = y_new, r_new, sign * zb.real
        norm = float(np.linalg.norm(r))
        trace.append(TraceRow(it, complex(zb), norm, alpha))
        if f < best[0]:
            best = (f, y.copy(), list(trace))
    if norm <= options.gradient_tolerance:
        return y, trace, True
    return best[1], best[2], False


def extremize(problem: HerglotzProblem, init: Trajectory, options: SolveOptions | None = None) -> SolveResult:
    """Drive ``init`` to a stationary point (or extremum) of ``Re z(b)``.

    Raises :class:`MaxIterationsExceeded` carrying the best iterate (as an
    uncertified :class:`SolveResult`) when the iteration budget runs out.
    """
    options = options or SolveOptions()
    problem.check(init)
    hn = problem.scale.h_nodes
    g = init.grid
    if min(g.margin_left, g.margin_right) < 2 * hn:
        raise InsufficientMargin(f"the solver needs {2 * hn} margin nodes on each side")
    stationary = options.mode is SolveMode.STATIONARY
    band = options.band if options.band is not None else (hn + 2 if stationary else 1)
    degree = options.degree if options.degree is not None else (4 if stationary else 2)
    closure = build_closure(problem, init, band, degree)
    obj = _Objective(problem, g, closure)
    y = closure.y0.copy()
    if stationary:
        y, trace, converged = _stationary(obj, y, options)
    else:
        y, trace, converged = _descent(obj, y, options)
    result = _finish(problem, g, closure, y, trace, converged, options)
    if not converged:
        raise MaxIterationsExceeded(result)
    return result
