import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from herglotz.errors import (
    AxisOutOfRange,
    GridMismatch,
    InsufficientMargin,
    InvalidRegime,
    LadderTooShort,
    PreconditionError,
    StepNotDividing,
    TooFewSamples,
)
from herglotz.scale import (
    FieldSamples,
    Kind,
    Mode,
    SampledSignal,
    ScaleParams,
    UniformGrid,
    box_derivative,
    box_h_derivative,
    box_integral,
    delta_derivative,
    dyadic_ladder,
    higher_order_box,
    holder_exponent,
    holder_theory,
    integration_by_parts_defect,
    leibniz_residual,
    nabla_derivative,
    partial_box,
    weierstrass,
)


def sig(func, a=0.0, b=1.0, step=0.01, margin=10):
    return SampledSignal.from_function(UniformGrid(a, b, step, margin), func)


def params(step, h, ladder=()):
    return ScaleParams.from_h(step, h, ladder)


# -- grid and signal types ----------------------------------------------------

def test_grid_nodes_and_margins():
    g = UniformGrid(0.0, 1.0, 0.25, 2)
    assert g.node_count == 9
    assert np.allclose(g.nodes, np.arange(-2, 7) * 0.25)
    assert g.nodes[g.ia] == 0.0 and g.nodes[g.ib] == 1.0


def test_grid_rejects_non_dividing_step():
    with pytest.raises(PreconditionError):
        UniformGrid(0.0, 1.0, 0.3)


def test_real_kind_requires_zero_imaginary_part():
    g = UniformGrid(0.0, 1.0, 0.5)
    with pytest.raises(PreconditionError):
        SampledSignal(g, np.array([1, 1j, 0]), Kind.REAL)


def test_signal_length_must_match_grid():
    with pytest.raises(PreconditionError):
        SampledSignal(UniformGrid(0.0, 1.0, 0.5), np.zeros(4))


def test_h_must_be_multiple_of_step():
    with pytest.raises(PreconditionError):
        params(0.01, 0.015)


def test_h_must_be_below_one():
    with pytest.raises(PreconditionError):
        params(0.5, 1.0)


def test_default_ladder_is_dyadic():
    assert dyadic_ladder(1 / 512) == pytest.approx([16 / 512, 8 / 512, 4 / 512, 2 / 512, 1 / 512])


# -- difference quotients -----------------------------------------------------

def test_delta_of_constant_is_zero():
    d = delta_derivative(sig(lambda t: 3 + 0 * t), params(0.01, 0.1))
    assert np.all(d.values == 0)


def test_delta_and_nabla_of_t_are_one():
    f = sig(lambda t: t)
    p = params(0.01, 0.1)
    assert np.allclose(delta_derivative(f, p).values, 1, atol=1e-12)
    assert np.allclose(nabla_derivative(f, p).values, 1, atol=1e-12)


def test_quotients_of_t_squared_at_one():
    f = sig(lambda t: t ** 2)
    p = params(0.01, 0.1)
    assert delta_derivative(f, p).at(1.0) == pytest.approx(2.1, abs=1e-12)
    assert nabla_derivative(f, p).at(1.0) == pytest.approx(1.9, abs=1e-12)


def test_delta_shrinks_right_margin():
    f = sig(lambda t: t)
    d = delta_derivative(f, params(0.01, 0.1))
    assert (d.grid.margin_left, d.grid.margin_right) == (10, 0)


def test_delta_needs_forward_samples():
    with pytest.raises(InsufficientMargin):
        delta_derivative(sig(lambda t: t, margin=0), params(0.01, 0.1))


# -- box derivative -----------------------------------------------------------

def test_box_of_affine_is_slope():
    # a dyadic grid keeps the samples exact, so only the operator can round
    step = 1 / 128
    d = box_h_derivative(sig(lambda t: 2 - 3 * t, step=step, margin=4), params(step, 4 * step))
    d = d.restrict(0)
    assert np.max(np.abs(d.values.real + 3)) <= 4 * np.spacing(3.0)
    assert np.all(d.values.imag == 0)


def test_box_of_affine_on_decimal_grid():
    d = box_h_derivative(sig(lambda t: 2 - 3 * t), params(0.01, 0.05)).restrict(0)
    assert np.allclose(d.values, -3, rtol=0, atol=1e-13)


def test_box_of_t_squared_at_one():
    d = box_h_derivative(sig(lambda t: t ** 2), params(0.01, 0.1))
    assert d.at(1.0) == pytest.approx(2.0 + 0.1j, abs=1e-12)


def test_box_is_mean_and_half_difference():
    f = sig(np.sin)
    p = params(0.01, 0.05)
    d = box_h_derivative(f, p).restrict(0).values
    fwd = delta_derivative(f, p).restrict(0).values.real
    bwd = nabla_derivative(f, p).restrict(0).values.real
    assert np.array_equal(d.real, (fwd + bwd) / 2)
    assert np.array_equal(d.imag, (fwd - bwd) / 2)


def test_box_needs_margins():
    with pytest.raises(InsufficientMargin):
        box_h_derivative(sig(np.sin, margin=2), params(0.01, 0.05)).restrict(0)


def test_box_of_complex_signal_splits_parts():
    g = UniformGrid(0.0, 1.0, 0.01, 5)
    p = params(0.01, 0.05)
    f = SampledSignal(g, np.sin(g.nodes) + 1j * np.cos(g.nodes))
    re = box_h_derivative(SampledSignal.real(g, np.sin(g.nodes)), p).values
    im = box_h_derivative(SampledSignal.real(g, np.cos(g.nodes)), p).values
    assert np.allclose(box_h_derivative(f, p).values, re + 1j * im, atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(c1=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
       c2=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_box_is_linear(c1, c2):
    g = UniformGrid(0.0, 1.0, 0.01, 5)
    p = params(0.01, 0.05)
    f = SampledSignal.real(g, np.sin(3 * g.nodes))
    h = SampledSignal.real(g, g.nodes ** 3)
    combo = SampledSignal(g, c1 * f.values + c2 * h.values)
    lhs = box_h_derivative(combo, p).values
    rhs = c1 * box_h_derivative(f, p).values + c2 * box_h_derivative(h, p).values
    scale = max(1.0, np.max(np.abs(rhs)))
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale


# -- extrapolation and higher order -------------------------------------------

def test_extrapolated_t_squared_recovers_2t():
    f = sig(lambda t: t ** 2, step=0.05, margin=4)
    p = params(0.05, 0.05, (0.2, 0.1, 0.05))
    out, report = box_derivative(f, p, Mode.EXTRAPOLATED)
    assert np.allclose(out.values.real, 2 * out.t, atol=1e-12)
    assert np.allclose(out.values.imag, 0, atol=1e-12)
    assert report.max_variance < 1e-24


def test_extrapolated_equals_fixed_for_affine():
    f = sig(lambda t: 1 + 2 * t, step=0.05, margin=4)
    p = params(0.05, 0.05, (0.2, 0.1, 0.05))
    fixed, none = box_derivative(f, p)
    extra, _ = box_derivative(f, p, Mode.EXTRAPOLATED)
    assert none is None
    assert np.allclose(fixed.restrict(0).values, extra.values, atol=1e-12)


def test_extrapolation_needs_ladder():
    f = sig(np.sin, margin=10)
    with pytest.raises(LadderTooShort):
        box_derivative(f, params(0.01, 0.02, (0.04, 0.02)), Mode.EXTRAPOLATED)


def test_extrapolation_flags_rough_signal():
    g = UniformGrid(0.0, 1.0, 1 / 1024, 64)
    p = ScaleParams.from_h(1 / 1024, 4 / 1024, dyadic_ladder(1 / 1024, 64, 5))
    _, smooth = box_derivative(SampledSignal.real(g, np.sin(g.nodes)), p, Mode.EXTRAPOLATED)
    _, rough = box_derivative(weierstrass(0.5, 3, 20, g), p, Mode.EXTRAPOLATED)
    assert rough.mean_variance >= 10 * smooth.mean_variance


def test_order_zero_returns_input():
    f = sig(np.sin)
    assert higher_order_box(f, 0, params(0.01, 0.02)) is f


def test_second_order_of_affine_is_zero():
    d = higher_order_box(sig(lambda t: 1 + t), 2, params(0.01, 0.05)).restrict(0)
    assert np.max(np.abs(d.values)) < 1e-12


def test_second_order_of_cube_matches_composition():
    f = sig(lambda t: t ** 3, a=-1.0, b=1.0, step=0.05, margin=4)
    p = params(0.05, 0.1)
    once = box_h_derivative(f, p)
    twice = box_h_derivative(once, p)
    assert higher_order_box(f, 2, p).at(0.0) == twice.at(0.0)


def test_composition_consistency():
    f = sig(np.exp, margin=12)
    p = params(0.01, 0.02)
    lhs = higher_order_box(f, 3, p).restrict(0).values
    rhs = higher_order_box(higher_order_box(f, 1, p), 2, p).restrict(0).values
    assert np.allclose(lhs, rhs, rtol=1e-10, atol=0)


def test_higher_order_margin_check():
    with pytest.raises(InsufficientMargin):
        higher_order_box(sig(np.sin, margin=5), 2, params(0.01, 0.05))


# -- partial derivative of fields ---------------------------------------------

def _field(func):
    grids = (UniformGrid(0.0, 2.0, 0.1, 2), UniformGrid(0.0, 3.0, 0.1, 2))
    return FieldSamples.from_function(grids, func)


def test_partial_along_other_axis_is_zero():
    d = partial_box(_field(lambda t, x: x + 0 * t), 0, params(0.1, 0.1))
    assert np.max(np.abs(d.values)) < 1e-12


def test_partial_of_sum_is_one():
    d = partial_box(_field(lambda t, x: t + x), 1, params(0.1, 0.1))
    assert np.allclose(d.values, 1, atol=1e-12)


def test_partial_of_product_at_point():
    u = _field(lambda t, x: t * x)
    d = partial_box(u, 0, params(0.1, 0.1))
    i = d.grids[0].index_of(1.0)
    j = d.grids[1].index_of(2.0)
    assert d.values[i, j] == pytest.approx(2.0, abs=1e-12)


def test_partial_axis_out_of_range():
    with pytest.raises(AxisOutOfRange):
        partial_box(_field(lambda t, x: t), 2, params(0.1, 0.1))


# -- Leibniz, Barrow, integration by parts ------------------------------------

def test_leibniz_constant_factor_is_exact():
    r = leibniz_residual(sig(lambda t: 2 + 0 * t), sig(np.sin), params(0.01, 0.05))
    assert np.max(np.abs(r.values)) < 1e-12


def test_leibniz_of_t_times_t():
    r = leibniz_residual(sig(lambda t: t), sig(lambda t: t), params(0.01, 0.1))
    assert np.allclose(r.values, 0.1j, atol=1e-12)


def test_leibniz_grid_mismatch():
    with pytest.raises(GridMismatch):
        leibniz_residual(sig(np.sin), sig(np.sin, margin=11), params(0.01, 0.05))


def test_barrow_affine():
    integral, defect = box_integral(sig(lambda t: t), params(0.01, 0.05))
    assert integral == pytest.approx(1.0, abs=1e-14)
    assert defect <= 1e-14


def test_barrow_t_squared():
    f = sig(lambda t: t ** 2)
    integral, defect = box_integral(f, params(0.01, 0.1))
    assert integral.real == pytest.approx(1.0, abs=1e-13)
    assert defect <= np.finfo(float).eps * f.grid.node_count


def test_barrow_sine_imaginary_part_is_order_h():
    f = sig(np.sin, a=0.0, b=math.pi, step=math.pi / 200, margin=8)
    for k in (8, 4, 2):
        integral, defect = box_integral(f, params(math.pi / 200, k * math.pi / 200))
        assert defect <= 64 * np.finfo(float).eps * f.grid.node_count
        assert abs(integral.imag) <= 2 * k * math.pi / 200


def test_barrow_step_not_dividing():
    f = sig(np.sin, step=0.01)
    with pytest.raises(StepNotDividing):
        box_integral(f, params(0.01, 0.03))


def test_by_parts_constant_factor():
    d = integration_by_parts_defect(sig(lambda t: 3 + 0 * t), sig(np.cos), params(0.01, 0.05))
    assert d <= 1e-13


def test_by_parts_identity_pair_defect_is_h():
    d = integration_by_parts_defect(sig(lambda t: t), sig(lambda t: t), params(0.01, 0.1))
    assert d == pytest.approx(0.1, abs=1e-12)


def test_by_parts_with_one_matches_barrow():
    f = sig(np.exp)
    p = params(0.01, 0.05)
    d = integration_by_parts_defect(f, sig(lambda t: 1 + 0 * t), p)
    assert d == pytest.approx(box_integral(f, p)[1], abs=1e-14)


# -- test signals and Hölder estimation ---------------------------------------

def test_weierstrass_one_term_is_cosine():
    g = UniformGrid(0.0, 1.0, 0.01)
    assert np.array_equal(weierstrass(0.5, 3, 1, g).values, np.cos(np.pi * g.nodes))


def test_weierstrass_bound_and_tail():
    g = UniformGrid(0.0, 1.0, 1 / 256)
    w30 = weierstrass(0.5, 3, 30, g).values
    w40 = weierstrass(0.5, 3, 40, g).values
    assert np.max(np.abs(w30)) <= 2
    assert np.max(np.abs(w30 - w40)) <= 0.5 ** 30 * 10


def test_weierstrass_regime():
    with pytest.raises(InvalidRegime):
        weierstrass(0.3, 3, 5, UniformGrid(0.0, 1.0, 0.01))


def test_holder_of_line():
    est = holder_exponent(sig(lambda t: t, margin=0, step=1 / 256))
    assert 0.95 <= est.alpha_hat <= 1.0


def test_holder_of_square_root():
    f = sig(lambda t: np.sqrt(np.abs(t)), a=-1.0, b=1.0, step=1 / 1024, margin=0)
    assert holder_exponent(f).alpha_hat == pytest.approx(0.5, abs=0.1)


def test_holder_of_weierstrass():
    g = UniformGrid(0.0, 1.0, 1 / 4096)
    est = holder_exponent(weierstrass(0.5, 3, 20, g))
    assert est.alpha_hat == pytest.approx(holder_theory(0.5, 3), abs=0.1)
    assert 0.0 <= est.r_squared <= 1.0
    x = np.array([p[0] for p in est.regression_points])
    y = np.array([p[1] for p in est.regression_points])
    assert est.slope == pytest.approx(np.polyfit(x, y, 1)[0])


def test_holder_needs_samples():
    with pytest.raises(TooFewSamples):
        holder_exponent(sig(np.sin, step=0.05, margin=0))
