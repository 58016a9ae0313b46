import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from dispersion_unmix.dual import Dual, clip_min, dot_part, sqrt, value

finite = st.floats(-50.0, 50.0)
positive = st.floats(0.1, 50.0)


def deriv(f, x, h=1e-7):
    return (f(x + h) - f(x - h)) / (2.0 * h)


@given(finite, finite)
def test_add_mul_rules(a, b):
    x = Dual(a, 1.0)
    y = x * x + 3.0 * x + b
    assert y.val == a * a + 3.0 * a + b
    assert y.dot == 2.0 * a + 3.0


@given(positive, positive)
def test_division_rule(a, b):
    x = Dual(a, 1.0)
    y = (x + b) / (x * x + 1.0)
    expected = deriv(lambda t: (t + b) / (t * t + 1.0), a)
    assert math.isclose(y.dot, expected, rel_tol=1e-6, abs_tol=1e-9)


@given(positive)
def test_sqrt_and_reciprocal(a):
    x = Dual(a, 1.0)
    assert math.isclose(sqrt(x).dot, 0.5 / math.sqrt(a), rel_tol=1e-12)
    assert math.isclose((1.0 / x).dot, -1.0 / (a * a), rel_tol=1e-12)


def test_numpy_payloads_defer_to_dual():
    arr = np.array([1.0, 4.0, 9.0])
    x = Dual(arr, np.ones(3))
    y = arr * x + 2.0  # ndarray * Dual must hit __rmul__, not a ufunc
    assert isinstance(y, Dual)
    assert np.array_equal(y.val, arr * arr + 2.0)
    assert np.array_equal(y.dot, arr)
    z = 1.0 - sqrt(x)
    assert np.allclose(z.val, 1.0 - np.sqrt(arr))
    assert np.allclose(z.dot, -0.5 / np.sqrt(arr))


def test_clip_min_zeroes_derivative_below_floor():
    x = Dual(np.array([1.0, -2.0]), np.array([5.0, 5.0]))
    y = clip_min(x, 0.5)
    assert np.array_equal(y.val, [1.0, 0.5])
    assert np.array_equal(y.dot, [5.0, 0.0])
    assert np.array_equal(clip_min(np.array([1.0, -2.0]), 0.5), [1.0, 0.5])


def test_value_and_dot_helpers():
    assert value(Dual(3.0, 2.0)) == 3.0
    assert value(3.0) == 3.0
    assert dot_part(Dual(3.0, 2.0)) == 2.0
    assert dot_part(3.0) == 0.0


def test_composite_pipeline_matches_finite_differences():
    def pipeline(t):
        return 1.0 - ((sqrt(t * t + 1.0) - 1.0) / (sqrt(t * t + 1.0) + 1.0))

    for a in (0.3, 1.7, 4.2):
        d = pipeline(Dual(a, 1.0))
        assert math.isclose(d.dot, deriv(pipeline, a), rel_tol=1e-6)
