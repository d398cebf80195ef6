"""Uniform grids, sampled signals and scale parameters."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from herglotz.errors import GridMismatch, InsufficientMargin, PreconditionError

_REL_TOL = 1e-9


def _as_int_ratio(value: float, unit: float, what: str) -> int:
    ratio = value / unit
    k = int(round(ratio))
    if k <= 0 or abs(ratio - k) > _REL_TOL * max(1.0, abs(ratio)):
        raise PreconditionError(f"{what}={value!r} is not a positive integer multiple of {unit!r}")
    return k


@dataclass(frozen=True)
class UniformGrid:
    """Nodes ``a - margin_nodes*step + k*step`` covering ``[a, b]`` plus margins.

    The right margin defaults to the left one; one-sided operators such as the
    delta derivative produce grids with unequal margins.
    """

    a: float
    b: float
    step: float
    margin_nodes: int = 0
    margin_right: int | None = None

    def __post_init__(self):
        if not self.step > 0:
            raise PreconditionError("grid step must be positive")
        if not self.b > self.a:
            raise PreconditionError("grid requires a < b")
        if self.margin_nodes < 0 or (self.margin_right is not None and self.margin_right < 0):
            raise PreconditionError("margins must be nonnegative")
        _as_int_ratio(self.b - self.a, self.step, "b - a")
        if self.margin_right is None:
            object.__setattr__(self, "margin_right", self.margin_nodes)

    @property
    def margin_left(self) -> int:
        return self.margin_nodes

    @property
    def intervals(self) -> int:
        """Number of steps between ``a`` and ``b``."""
        return int(round((self.b - self.a) / self.step))

    @property
    def node_count(self) -> int:
        return self.intervals + self.margin_left + self.margin_right + 1

    @property
    def ia(self) -> int:
        """Index of the node at ``a``."""
        return self.margin_left

    @property
    def ib(self) -> int:
        """Index of the node at ``b``."""
        return self.margin_left + self.intervals

    @property
    def nodes(self) -> np.ndarray:
        k = np.arange(self.node_count) - self.margin_left
        t = self.a + k * self.step
        t[self.ib] = self.b
        return t

    @property
    def interior_nodes(self) -> np.ndarray:
        return self.nodes[self.ia:self.ib + 1]

    def node(self, k: int) -> float:
        return float(self.nodes[k])

    def index_of(self, t: float) -> int:
        k = (t - self.a) / self.step + self.margin_left
        i = int(round(k))
        if abs(k - i) > 1e-6 or not 0 <= i < self.node_count:
            raise PreconditionError(f"t={t!r} is not a grid node")
        return i

    def shrink(self, left: int = 0, right: int = 0) -> "UniformGrid":
        ml, mr = self.margin_left - left, self.margin_right - right
        if ml < 0 or mr < 0:
            raise InsufficientMargin(
                f"need {left}/{right} margin nodes, grid has {self.margin_left}/{self.margin_right}")
        return UniformGrid(self.a, self.b, self.step, ml, mr)

    def with_margins(self, left: int, right: int | None = None) -> "UniformGrid":
        return UniformGrid(self.a, self.b, self.step, left, left if right is None else right)

    def same_nodes(self, other: "UniformGrid") -> bool:
        return (self.a == other.a and self.b == other.b and self.step == other.step
                and self.margin_left == other.margin_left and self.margin_right == other.margin_right)

    def to_json(self) -> dict:
        doc = {"a": self.a, "b": self.b, "step": self.step, "margin_nodes": self.margin_left}
        if self.margin_right != self.margin_left:
            doc["margin_right"] = self.margin_right
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "UniformGrid":
        return cls(float(doc["a"]), float(doc["b"]), float(doc["step"]),
                   int(doc.get("margin_nodes", 0)), doc.get("margin_right"))


class Kind(enum.Enum):
    REAL = "real-valued"
    COMPLEX = "complex-valued"


@dataclass(frozen=True, eq=False)
class SampledSignal:
    """Complex samples, one per grid node; immutable."""

    grid: UniformGrid
    values: np.ndarray
    kind: Kind = Kind.COMPLEX

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        if vals.ndim != 1 or vals.shape[0] != self.grid.node_count:
            raise PreconditionError(
                f"expected {self.grid.node_count} samples, got shape {vals.shape}")
        if self.kind is Kind.REAL and np.any(vals.imag != 0):
            raise PreconditionError("real-valued signal has nonzero imaginary parts")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def real(cls, grid: UniformGrid, values: Sequence[float]) -> "SampledSignal":
        return cls(grid, np.asarray(values, dtype=float), Kind.REAL)

    @classmethod
    def from_function(cls, grid: UniformGrid, func: Callable[[np.ndarray], np.ndarray]) -> "SampledSignal":
        vals = np.asarray(func(grid.nodes))
        if vals.ndim == 0:
            vals = np.full(grid.node_count, vals)
        kind = Kind.COMPLEX if np.iscomplexobj(vals) else Kind.REAL
        return cls(grid, vals, kind)

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def interior(self) -> np.ndarray:
        """Samples on ``[a, b]``."""
        return self.values[self.grid.ia:self.grid.ib + 1]

    @property
    def is_real(self) -> bool:
        return self.kind is Kind.REAL

    def at(self, t: float) -> complex:
        return complex(self.values[self.grid.index_of(t)])

    def restrict(self, left: int, right: int | None = None) -> "SampledSignal":
        """Keep only ``left``/``right`` margin nodes."""
        right = left if right is None else right
        g = self.grid
        if left > g.margin_left or right > g.margin_right:
            raise InsufficientMargin("cannot restrict to wider margins")
        lo = g.margin_left - left
        hi = g.node_count - (g.margin_right - right)
        return SampledSignal(g.with_margins(left, right), self.values[lo:hi], self.kind)

    def map(self, func: Callable[[np.ndarray], np.ndarray]) -> "SampledSignal":
        return SampledSignal(self.grid, func(self.values))

    def _combine(self, other, op):
        if isinstance(other, SampledSignal):
            if not self.grid.same_nodes(other.grid):
                raise GridMismatch("signals live on different grids")
            vals = op(self.values, other.values)
            real = self.is_real and other.is_real
        else:
            vals = op(self.values, other)
            real = self.is_real and np.isrealobj(other)
        return SampledSignal(self.grid, vals, Kind.REAL if real else Kind.COMPLEX)

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __rsub__(self, other):
        return self._combine(other, lambda u, w: w - u)

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return SampledSignal(self.grid, -self.values, self.kind)

    def __repr__(self):
        return f"SampledSignal(grid={self.grid!r}, kind={self.kind.value}, n={len(self.values)})"


@dataclass(frozen=True, eq=False)
class FieldSamples:
    """Samples on a product grid; axis 0 is time, the rest are space axes."""

    grids: tuple[UniformGrid, ...]
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        shape = tuple(g.node_count for g in self.grids)
        if vals.shape != shape:
            raise PreconditionError(f"expected samples of shape {shape}, got {vals.shape}")
        vals.setflags(write=False)
        object.__setattr__(self, "grids", tuple(self.grids))
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grids: Sequence[UniformGrid], func) -> "FieldSamples":
        axes = np.meshgrid(*(g.nodes for g in grids), indexing="ij")
        vals = np.asarray(func(*axes))
        if vals.ndim == 0:
            vals = np.full(axes[0].shape, vals)
        return cls(tuple(grids), vals)

    @property
    def ndim(self) -> int:
        return len(self.grids)

    def restrict(self, margins: Sequence[int]) -> "FieldSamples":
        """Keep ``margins[k]`` nodes on both sides of axis ``k``."""
        index = []
        grids = []
        for g, m in zip(self.grids, margins):
            if m > g.margin_left or m > g.margin_right:
                raise InsufficientMargin("cannot restrict to wider margins")
            lo = g.margin_left - m
            index.append(slice(lo, lo + g.intervals + 2 * m + 1))
            grids.append(g.with_margins(m))
        return FieldSamples(tuple(grids), self.values[tuple(index)])

    @property
    def interior(self) -> np.ndarray:
        return self.restrict([0] * self.ndim).values


def dyadic_ladder(step: float, top_nodes: int = 16, points: int = 5) -> tuple[float, ...]:
    """``h_k = top_nodes*step*2**-k``; stops before ``h`` drops below one step."""
    out = []
    nodes = top_nodes
    while nodes > 1 and nodes * step >= 1:
        nodes //= 2
    for _ in range(points):
        if nodes < 1:
            break
        out.append(nodes * step)
        nodes //= 2
    return tuple(out)


@dataclass(frozen=True)
class ScaleParams:
    """Scale step ``h = h_nodes * step`` and an optional decreasing h-ladder."""

    step: float
    h_nodes: int
    ladder: tuple[float, ...] = field(default=())
    ladder_min_points: int = 3

    def __post_init__(self):
        if self.h_nodes < 1:
            raise PreconditionError("h_nodes must be a positive integer")
        if not 0 < self.h < 1:
            raise PreconditionError(f"scale step h={self.h!r} must lie in (0, 1)")
        if self.ladder_min_points < 3:
            raise PreconditionError("ladder_min_points must be at least 3")
        ladder = tuple(float(v) for v in self.ladder)
        for v in ladder:
            _as_int_ratio(v, self.step, "ladder entry")
            if not 0 < v < 1:
                raise PreconditionError("ladder entries must lie in (0, 1)")
        if any(b >= a for a, b in zip(ladder, ladder[1:])):
            raise PreconditionError("ladder must be strictly decreasing")
        object.__setattr__(self, "ladder", ladder)

    @classmethod
    def from_h(cls, step: float, h: float, ladder: Sequence[float] | None = None,
               ladder_min_points: int = 3) -> "ScaleParams":
        n = _as_int_ratio(h, step, "h")
        if ladder is None:
            ladder = dyadic_ladder(step)
        return cls(step, n, tuple(ladder), ladder_min_points)

    @property
    def h(self) -> float:
        return self.h_nodes * self.step

    @property
    def ladder_nodes(self) -> tuple[int, ...]:
        return tuple(_as_int_ratio(v, self.step, "ladder entry") for v in self.ladder)

    def with_h_nodes(self, h_nodes: int) -> "ScaleParams":
        return ScaleParams(self.step, h_nodes, self.ladder, self.ladder_min_points)
