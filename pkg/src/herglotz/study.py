"""Convergence studies: rerun a residual across an h-ladder and fit a log-log slope."""

from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from herglotz.core import HerglotzProblem, el_residual, integrate_z
from herglotz.errors import LadderTooShort, ProblemError
from herglotz.fields import FieldProblem, el_residual_field, integrate_z_field
from herglotz.higher_order import HigherOrderProblem, el_residual_ho, integrate_z_ho
from herglotz.scale import (
    SampledSignal,
    ScaleParams,
    box_h_derivative,
    box_integral,
    leibniz_residual,
)

MIN_LADDER_POINTS = 3


def thread_count(requested: int | None = None) -> int:
    """``requested`` if given, else ``HERGLOTZ_THREADS``, else 1."""
    if requested is None:
        env = os.environ.get("HERGLOTZ_THREADS", "").strip()
        requested = int(env) if env else 1
    if requested < 1:
        raise ValueError("thread count must be at least 1")
    return requested


def loglog_slope(hs: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of ``log value`` against ``log h``; ``nan`` if any value is zero."""
    hs = np.asarray(hs, dtype=float)
    vs = np.asarray(values, dtype=float)
    if len(hs) < 2 or np.any(vs <= 0):
        return float("nan")
    return float(np.polyfit(np.log(hs), np.log(vs), 1)[0])


@dataclass(frozen=True)
class StudyResult:
    kind: str
    hs: tuple[float, ...]
    values: tuple[float, ...]
    slope: float

    def to_json(self) -> dict:
        return {"kind": self.kind, "h": list(self.hs), "value": list(self.values), "slope": self.slope}


def _check_ladder(ladder: Sequence[float]) -> tuple[float, ...]:
    ladder = tuple(float(h) for h in ladder)
    if len(ladder) < MIN_LADDER_POINTS:
        raise LadderTooShort(f"a study needs at least {MIN_LADDER_POINTS} ladder entries, got {len(ladder)}")
    return ladder


def run_ladder(kind: str, fn: Callable[[float], float], ladder: Sequence[float],
               threads: int | None = None) -> StudyResult:
    """Evaluate ``fn(h)`` for every ladder entry (in parallel when asked) and fit the slope."""
    ladder = _check_ladder(ladder)
    workers = min(thread_count(threads), len(ladder))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = tuple(float(v) for v in pool.map(fn, ladder))
    else:
        values = tuple(float(fn(h)) for h in ladder)
    return StudyResult(kind, ladder, values, loglog_slope(ladder, values))


def _params(f: SampledSignal, h: float) -> ScaleParams:
    return ScaleParams.from_h(f.grid.step, h, ())


def imag_study(f: SampledSignal, ladder: Sequence[float], threads: int | None = None) -> StudyResult:
    """``max |Im box_h f|`` on ``[a, b]``."""
    def one(h):
        d = box_h_derivative(f, _params(f, h)).restrict(0)
        return np.max(np.abs(d.values.imag))
    return run_ladder("imag", one, ladder, threads)


def derivative_study(f: SampledSignal, exact: Callable, ladder: Sequence[float],
                     threads: int | None = None) -> StudyResult:
    """``max |Re box_h f - exact|`` on ``[a, b]``."""
    def one(h):
        d = box_h_derivative(f, _params(f, h)).restrict(0)
        return np.max(np.abs(d.values.real - exact(d.t)))
    return run_ladder("derivative", one, ladder, threads)


def leibniz_study(f: SampledSignal, g: SampledSignal, ladder: Sequence[float],
                  threads: int | None = None) -> StudyResult:
    """Sup norm of the product-rule residual on ``[a, b]``."""
    return run_ladder("leibniz", lambda h: np.max(np.abs(leibniz_residual(f, g, _params(f, h)).values)),
                      ladder, threads)


def barrow_study(f: SampledSignal, ladder: Sequence[float], threads: int | None = None) -> StudyResult:
    """Defect of the matched-quadrature integral of ``box_h f`` against ``f(b) - f(a)``."""
    return run_ladder("barrow", lambda h: box_integral(f, _params(f, h))[1], ladder, threads)


def with_h(problem, h: float):
    """Copy of ``problem`` at scale ``h`` (grid step unchanged, ladder dropped)."""
    if isinstance(problem, FieldProblem):
        return dataclasses.replace(problem, h=float(h))
    if isinstance(problem, (HerglotzProblem, HigherOrderProblem)):
        return dataclasses.replace(problem, scale=ScaleParams.from_h(problem.scale.step, h, ()))
    raise ProblemError(f"unsupported problem type {type(problem).__name__}")


def residual_sup(problem, init) -> float:
    """Largest sup norm of the residual along the trajectory described by ``init``.

    ``init`` is what the problem's own sampler accepts: a list of expressions
    or callables for first-order problems, one of them for higher-order or
    field problems.
    """
    if isinstance(problem, FieldProblem):
        u = problem.sample(init)
        return el_residual_field(problem, u, integrate_z_field(problem, u)).sup_norm
    if isinstance(problem, HigherOrderProblem):
        x = problem.trajectory(init)
        return max(el_residual_ho(problem, x, integrate_z_ho(problem, x)).sup_norms)
    x = problem.trajectory(init)
    return max(el_residual(problem, x, integrate_z(problem, x)).sup_norms)


def el_study(problem, init, ladder: Sequence[float], threads: int | None = None) -> StudyResult:
    """Residual sup norm along a fixed candidate while ``h`` walks the ladder."""
    return run_ladder("el", lambda h: residual_sup(with_h(problem, h), init), ladder, threads)
