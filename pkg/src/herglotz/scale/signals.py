"""Test-signal generators and Hölder-exponent diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from herglotz.errors import InvalidRegime, TooFewSamples
from herglotz.scale.grid import SampledSignal, UniformGrid


def weierstrass(amp: float, freq: int, terms: int, grid: UniformGrid) -> SampledSignal:
    """Sample ``sum_{k<terms} amp**k * cos(freq**k * pi * t)`` on every grid node.

    For ``amp*freq > 1`` the sum is nowhere differentiable with Hölder
    exponent ``-log(amp)/log(freq)``.
    """
    if not 0 < amp < 1:
        raise InvalidRegime("amplitude ratio must lie in (0, 1)")
    if int(freq) != freq or freq < 2:
        raise InvalidRegime("frequency ratio must be an integer >= 2")
    if amp * freq <= 1:
        raise InvalidRegime(f"amp*freq = {amp * freq} <= 1 gives a differentiable sum")
    if terms < 1:
        raise ValueError("need at least one term")
    t = grid.nodes
    out = np.zeros_like(t)
    for k in range(terms):
        out += amp ** k * np.cos(float(freq) ** k * np.pi * t)
    return SampledSignal.real(grid, out)


def holder_theory(amp: float, freq: int) -> float:
    return -np.log(amp) / np.log(freq)


@dataclass(frozen=True)
class HolderEstimate:
    alpha_hat: float
    slope: float
    regression_points: tuple[tuple[float, float], ...]
    r_squared: float


def holder_exponent(f: SampledSignal, min_nodes: int = 64) -> HolderEstimate:
    """Estimate the Hölder exponent from the sup-modulus of continuity.

    ``M(d) = max_t |f(t+d) - f(t)|`` is computed for dyadic lags
    ``d = 2**k * step`` up to an eighth of ``b - a``; the exponent is the
    least-squares slope of ``log M`` against ``log d``, clamped to ``(0, 1]``.
    """
    v = f.values
    if len(v) < min_nodes:
        raise TooFewSamples(f"need at least {min_nodes} samples, got {len(v)}")
    step = f.grid.step
    span = f.grid.b - f.grid.a
    pts = []
    lag = 1
    while lag * step <= span / 8 * (1 + 1e-12) and lag < len(v):
        m = np.max(np.abs(v[lag:] - v[:-lag]))
        if m > 0:
            pts.append((np.log(lag * step), np.log(m)))
        lag *= 2
    if len(pts) < 2:
        raise TooFewSamples("not enough nonzero lags for a regression")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    slope, icpt = np.polyfit(x, y, 1)
    fit = slope * x + icpt
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    alpha = float(min(max(slope, np.finfo(float).tiny), 1.0))
    return HolderEstimate(alpha, float(slope), tuple((float(a), float(b)) for a, b in pts),
                          float(min(max(r2, 0.0), 1.0)))
