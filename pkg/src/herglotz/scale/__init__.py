"""Scale calculus on uniform grids."""

from herglotz.scale.grid import (
    FieldSamples,
    Kind,
    SampledSignal,
    ScaleParams,
    UniformGrid,
    dyadic_ladder,
)
from herglotz.scale.operators import (
    DefectReport,
    Mode,
    affine_fit,
    box_derivative,
    box_h_derivative,
    box_integral,
    box_values,
    delta_derivative,
    higher_order_box,
    integration_by_parts_defect,
    leibniz_residual,
    nabla_derivative,
    partial_box,
)
from herglotz.scale.signals import HolderEstimate, holder_exponent, holder_theory, weierstrass

__all__ = [
    "DefectReport", "FieldSamples", "HolderEstimate", "Kind", "Mode", "SampledSignal",
    "ScaleParams", "UniformGrid", "affine_fit", "box_derivative", "box_h_derivative",
    "box_integral", "box_values", "delta_derivative", "dyadic_ladder", "higher_order_box",
    "holder_exponent", "holder_theory", "integration_by_parts_defect", "leibniz_residual",
    "nabla_derivative", "partial_box", "weierstrass",
]
