"""Difference quotients and the complex h-scale derivative on uniform grids.

Every operator works on node indices only: ``h`` is an integer number of
grid steps, so no interpolation is ever involved.  Margins are consumed
explicitly and an operator raises :class:`InsufficientMargin` instead of
falling back to one-sided formulas.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from herglotz.errors import (
    AxisOutOfRange,
    GridMismatch,
    InsufficientMargin,
    LadderTooShort,
    StepNotDividing,
)
from herglotz.scale.grid import FieldSamples, Kind, SampledSignal, ScaleParams, UniformGrid


def _check_scale(f: SampledSignal, params: ScaleParams) -> int:
    if abs(f.grid.step - params.step) > 1e-12 * f.grid.step:
        raise GridMismatch("scale parameters were built for a different grid step")
    return params.h_nodes


def _quotients(values: np.ndarray, hn: int, h: float, axis: int = -1):
    """Forward and backward quotients on the nodes that have both neighbours."""
    v = np.moveaxis(values, axis, -1)
    fwd = (v[..., 2 * hn:] - v[..., hn:-hn]) / h
    bwd = (v[..., hn:-hn] - v[..., :-2 * hn]) / h
    return np.moveaxis(fwd, -1, axis), np.moveaxis(bwd, -1, axis)


def _combine(fwd: np.ndarray, bwd: np.ndarray) -> np.ndarray:
    # real and imaginary parts of the operand are treated separately so that a
    # real operand gives re = (fwd + bwd)/2 and im = (fwd - bwd)/2 bit for bit
    fr, fi = fwd.real, fwd.imag
    br, bi = bwd.real, bwd.imag
    re = 0.5 * (fr + br) - 0.5 * (fi - bi)
    im = 0.5 * (fr - br) + 0.5 * (fi + bi)
    return re + 1j * im


def box_values(values: np.ndarray, hn: int, h: float, axis: int = -1) -> np.ndarray:
    """Array form of the h-scale derivative; drops ``hn`` nodes on each end of ``axis``."""
    if values.shape[axis] < 2 * hn + 1:
        raise InsufficientMargin("not enough samples for the requested scale step")
    fwd, bwd = _quotients(np.asarray(values, dtype=complex), hn, h, axis)
    return _combine(fwd, bwd)


def delta_derivative(f: SampledSignal, params: ScaleParams) -> SampledSignal:
    """Forward quotient ``(f(t+h) - f(t))/h``; the grid loses ``h_nodes`` on the right."""
    hn = _check_scale(f, params)
    grid = f.grid.shrink(right=hn)
    v = f.values
    out = (v[hn:] - v[:-hn]) / params.h
    return SampledSignal(grid, out, f.kind)


def nabla_derivative(f: SampledSignal, params: ScaleParams) -> SampledSignal:
    """Backward quotient ``(f(t) - f(t-h))/h``; the grid loses ``h_nodes`` on the left."""
    hn = _check_scale(f, params)
    grid = f.grid.shrink(left=hn)
    v = f.values
    out = (v[hn:] - v[:-hn]) / params.h
    return SampledSignal(grid, out, f.kind)


def box_h_derivative(f: SampledSignal, params: ScaleParams) -> SampledSignal:
    """Complex h-scale derivative.

    The result keeps whatever margin is left after consuming ``h_nodes`` on
    each side, so it can be fed back into this operator.
    """
    hn = _check_scale(f, params)
    grid = f.grid.shrink(hn, hn)
    return SampledSignal(grid, box_values(f.values, hn, params.h))


def higher_order_box(f: SampledSignal, n: int, params: ScaleParams) -> SampledSignal:
    """``n``-fold composition of :func:`box_h_derivative`; ``n = 0`` returns ``f``."""
    if n < 0:
        raise ValueError("order must be nonnegative")
    hn = _check_scale(f, params)
    if min(f.grid.margin_left, f.grid.margin_right) < n * hn:
        raise InsufficientMargin(f"order {n} needs {n * hn} margin nodes on each side")
    out = f
    for _ in range(n):
        out = box_h_derivative(out, params)
    return out


class Mode(enum.Enum):
    FIXED_H = "fixed_h"
    EXTRAPOLATED = "extrapolated"


@dataclass(frozen=True)
class DefectReport:
    """Per-node spread of the affine-in-h fit used by extrapolated mode."""

    ladder: tuple[float, ...]
    variance: np.ndarray
    slope: np.ndarray

    @property
    def max_variance(self) -> float:
        return float(np.max(self.variance))

    @property
    def mean_variance(self) -> float:
        return float(np.mean(self.variance))


def affine_fit(hs: np.ndarray, samples: np.ndarray):
    """Least-squares ``v(h) = v0 + c*h`` per column of ``samples`` (rows follow ``hs``).

    Returns ``(v0, c, variance)``; variance is the residual sum of squares
    over the degrees of freedom left after the fit.
    """
    hs = np.asarray(hs, dtype=float)
    hbar = hs.mean()
    dh = hs - hbar
    vbar = samples.mean(axis=0)
    c = (dh[:, None] * (samples - vbar)).sum(axis=0) / (dh @ dh)
    v0 = vbar - c * hbar
    resid = samples - (v0 + np.outer(hs, c))
    dof = max(len(hs) - 2, 1)
    variance = (np.abs(resid) ** 2).sum(axis=0) / dof
    return v0, c, variance


def box_derivative(f: SampledSignal, params: ScaleParams, mode: Mode | str = Mode.FIXED_H):
    """Scale derivative estimate and, in extrapolated mode, its defect report.

    ``fixed_h`` is :func:`box_h_derivative` at ``params.h`` (report ``None``).
    ``extrapolated`` evaluates the operator on every ladder entry, fits an
    affine model in ``h`` at each node of ``[a, b]`` and returns the intercept.
    """
    mode = Mode(mode)
    if mode is Mode.FIXED_H:
        return box_h_derivative(f, params), None
    _check_scale(f, params)
    ladder = params.ladder_nodes
    if len(ladder) < params.ladder_min_points:
        raise LadderTooShort(
            f"ladder has {len(ladder)} entries, at least {params.ladder_min_points} required")
    need = max(ladder)
    if min(f.grid.margin_left, f.grid.margin_right) < need:
        raise InsufficientMargin(f"largest ladder entry needs {need} margin nodes")
    rows = []
    for hn in ladder:
        p = params.with_h_nodes(hn)
        rows.append(box_h_derivative(f, p).interior)
    hs = np.array([hn * params.step for hn in ladder])
    v0, c, var = affine_fit(hs, np.array(rows))
    out = SampledSignal(f.grid.with_margins(0), v0)
    return out, DefectReport(tuple(hs), var, c)


def partial_box(u: FieldSamples, axis: int, params: ScaleParams) -> FieldSamples:
    """h-scale derivative along one axis of a product-grid field."""
    if not 0 <= axis < u.ndim:
        raise AxisOutOfRange(f"axis {axis} out of range for a {u.ndim}-axis field")
    g = u.grids[axis]
    if abs(g.step - params.step) > 1e-12 * g.step:
        raise GridMismatch("axis step differs from the scale parameters' step")
    hn = params.h_nodes
    grids = list(u.grids)
    grids[axis] = g.shrink(hn, hn)
    return FieldSamples(tuple(grids), box_values(u.values, hn, params.h, axis=axis))


def leibniz_residual(f: SampledSignal, g: SampledSignal, params: ScaleParams) -> SampledSignal:
    """``box(f g) - box(f) g - f box(g)`` on ``[a, b]``."""
    if not f.grid.same_nodes(g.grid):
        raise GridMismatch("Leibniz residual needs both signals on one grid")
    _check_scale(f, params)
    fg = SampledSignal(f.grid, f.values * g.values)
    bfg = box_h_derivative(fg, params).restrict(0)
    bf = box_h_derivative(f, params).restrict(0)
    bg = box_h_derivative(g, params).restrict(0)
    fi, gi = f.interior, g.interior
    res = bfg.values - bf.values * gi - fi * bg.values
    return SampledSignal(f.grid.with_margins(0), res)


def _coarse_indices(grid: UniformGrid, hn: int) -> np.ndarray:
    if grid.intervals % hn:
        raise StepNotDividing(f"h = {hn} steps does not divide b - a = {grid.intervals} steps")
    return np.arange(grid.ia, grid.ib + 1, hn)


def _matched_integral(fv: np.ndarray, gv: np.ndarray, idx: np.ndarray, h: float) -> complex:
    """Matched quadrature of ``box(f) * g`` on the coarse nodes ``idx``.

    Forward quotients are summed with left rectangles, backward quotients
    with right rectangles, so ``g = 1`` telescopes to ``f(b) - f(a)``.
    """
    left, right = idx[:-1], idx[1:]
    fwd = (fv[right] - fv[left]) / h          # delta quotient at the left nodes
    s_fwd = h * np.sum(fwd * gv[left])
    s_bwd = h * np.sum(fwd * gv[right])       # the same quotient is the nabla one at the right nodes
    return complex(_combine(np.asarray(s_fwd), np.asarray(s_bwd)))


def box_integral(f: SampledSignal, params: ScaleParams):
    """Integral of the h-scale derivative over ``[a, b]`` and its Barrow defect.

    Returns ``(integral, defect)`` with ``defect = |integral - (f(b) - f(a))|``.
    """
    hn = _check_scale(f, params)
    idx = _coarse_indices(f.grid, hn)
    ones = np.ones_like(f.values)
    val = _matched_integral(f.values, ones, idx, params.h)
    jump = complex(f.values[f.grid.ib] - f.values[f.grid.ia])
    return val, abs(val - jump)


def integration_by_parts_defect(f: SampledSignal, g: SampledSignal, params: ScaleParams) -> float:
    """``|int box(f) g + int f box(g) - [f g]_a^b|`` under the matched quadrature."""
    if not f.grid.same_nodes(g.grid):
        raise GridMismatch("integration by parts needs both signals on one grid")
    hn = _check_scale(f, params)
    idx = _coarse_indices(f.grid, hn)
    i1 = _matched_integral(f.values, g.values, idx, params.h)
    i2 = _matched_integral(g.values, f.values, idx, params.h)
    ia, ib = f.grid.ia, f.grid.ib
    bracket = complex(f.values[ib] * g.values[ib] - f.values[ia] * g.values[ia])
    return abs(i1 + i2 - bracket)


def to_real_kind(f: SampledSignal) -> SampledSignal:
    """Reinterpret a signal with zero imaginary parts as real-valued."""
    return SampledSignal(f.grid, f.values.real, Kind.REAL)
