import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chtw.model import Axis, Field, OperatorSpec, Space, scalar_space
from chtw.operators import apply, bind, sum_contributions

ONE = scalar_space("X")
TWO = Space("Y", (Axis(0.0, 2.0, 2),))
FOUR = Space("Z", (Axis(0.0, 1.0, 2), Axis(0.0, 1.0, 2)))


def test_gain_linear_case():
    op = bind(OperatorSpec.make_gain(0.1), ONE, ONE)
    assert apply(op, ONE.constant(13.0)).values.tolist() == [0.1 * 13.0]
    np.testing.assert_allclose(apply(op, ONE.constant(13.0)).values, [1.3], rtol=1e-15)


def test_gain_identity():
    f = Field(FOUR, [0.0, 1.5, -2.0, 3.25])
    assert apply(bind(OperatorSpec.make_gain(1.0), FOUR, FOUR), f) == f


def test_gain_needs_same_space():
    with pytest.raises(ValueError):
        bind(OperatorSpec.make_gain(1.0), ONE, TWO)


def test_const_deposit_any_crosses_spaces():
    op = bind(OperatorSpec.make_const_deposit(TWO.constant(2.0), "any"), ONE, TWO)
    assert apply(op, ONE.constant(0.0)).values.tolist() == [0.0, 0.0]
    assert apply(op, ONE.constant(1.0)).values.tolist() == [2.0, 2.0]


def test_const_deposit_mean():
    op = bind(OperatorSpec.make_const_deposit(Field(TWO, [1.0, 3.0]), "mean"), FOUR, TWO)
    out = apply(op, Field(FOUR, [1.0, 0.0, 1.0, 0.0]))
    assert out.values.tolist() == [0.5, 1.5]


def test_const_deposit_rejects_wrong_space():
    with pytest.raises(ValueError):
        bind(OperatorSpec.make_const_deposit(ONE.constant(1.0)), ONE, TWO)
    with pytest.raises(ValueError):
        OperatorSpec.make_const_deposit(ONE.constant(1.0), "median")


def test_linear_kernel():
    spec = OperatorSpec.make_kernel([(0, 0, 1.0), (0, 3, 2.0), (1, 1, -1.0)], (2, 4))
    op = bind(spec, FOUR, TWO)
    out = apply(op, Field(FOUR, [1.0, 2.0, 3.0, 4.0]))
    assert out.values.tolist() == [9.0, -2.0]


def test_kernel_shape_checks():
    with pytest.raises(ValueError):
        OperatorSpec.make_kernel([(2, 0, 1.0)], (2, 4))
    with pytest.raises(ValueError):
        OperatorSpec.make_kernel([(0, 0, 1.0), (0, 0, 2.0)], (2, 4))
    with pytest.raises(ValueError):
        bind(OperatorSpec.make_kernel([], (4, 2)), FOUR, TWO)


def test_apply_checks_input_space():
    op = bind(OperatorSpec.make_gain(2.0), ONE, ONE)
    with pytest.raises(ValueError):
        apply(op, TWO.constant(1.0))


def test_sum_two_gains():
    a = bind(OperatorSpec.make_gain(0.5), ONE, ONE)
    b = bind(OperatorSpec.make_gain(0.25), ONE, ONE)
    out = sum_contributions([(a, ONE.constant(2.0)), (b, ONE.constant(4.0))])
    assert out.values.tolist() == [2.0]


def test_sum_empty():
    assert sum_contributions([], space=TWO) == TWO.zeros()
    with pytest.raises(ValueError):
        sum_contributions([])


def test_sum_rate_contribution_two_controllers():
    g = bind(OperatorSpec.make_gain(0.1), ONE, ONE)
    out = sum_contributions([(g, ONE.constant(11.0)), (g, ONE.constant(17.0))])
    assert out.values[0] == 0.1 * 11.0 + 0.1 * 17.0
    assert out.values[0] == pytest.approx(2.8, abs=1e-12)


def test_sum_accumulates_left_to_right_onto_start():
    g = bind(OperatorSpec.make_gain(0.1), ONE, ONE)
    out = sum_contributions(
        [(g, ONE.constant(11.0)), (g, ONE.constant(17.0))], start=ONE.constant(3.0)
    )
    # (3 + 1.1) + 1.7, not 3 + (1.1 + 1.7); the two differ by one ulp
    assert out.values[0] == (3.0 + 0.1 * 11.0) + 0.1 * 17.0
    assert out.values[0] != 3.0 + (0.1 * 11.0 + 0.1 * 17.0)


def test_sum_rejects_mixed_spaces():
    a = bind(OperatorSpec.make_gain(1.0), ONE, ONE)
    b = bind(OperatorSpec.make_const_deposit(TWO.constant(1.0)), ONE, TWO)
    with pytest.raises(ValueError):
        sum_contributions([(a, ONE.constant(1.0)), (b, ONE.constant(1.0))])


finite = st.floats(-1e6, 1e6, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(finite, min_size=4, max_size=4),
    st.lists(finite, min_size=4, max_size=4),
    finite, finite, finite,
)
def test_linearity(f, g, a, b, gain):
    f, g = np.array(f), np.array(g)
    kernel = OperatorSpec.make_kernel([(0, 0, 0.5), (0, 2, -1.25), (1, 3, 3.0), (1, 1, 1.0)], (2, 4))
    for op in (bind(OperatorSpec.make_gain(gain), FOUR, FOUR), bind(kernel, FOUR, TWO)):
        lhs = op(a * f + b * g)
        rhs = a * op(f) + b * op(g)
        scale = max(1.0, np.abs(a * op(f)).max(), np.abs(b * op(g)).max())
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * scale)


@settings(max_examples=60, deadline=None)
@given(st.lists(finite, min_size=4, max_size=4), st.sampled_from(["any", "mean"]))
def test_apply_stays_finite(values, mode):
    f = Field(FOUR, values)
    ops = [
        bind(OperatorSpec.make_gain(0.3), FOUR, FOUR),
        bind(OperatorSpec.make_const_deposit(TWO.constant(-2.0), mode), FOUR, TWO),
        bind(OperatorSpec.make_kernel([(0, 1, 2.0), (1, 0, 1.0)], (2, 4)), FOUR, TWO),
    ]
    for op in ops:
        assert np.all(np.isfinite(apply(op, f).values))
