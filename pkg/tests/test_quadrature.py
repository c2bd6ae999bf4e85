import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nls_conserve import quadrature


@pytest.mark.parametrize("rule,m", [("trapezoid", 5), ("simpson", 5), ("simpson", 9)])
def test_weights_sum_to_length(rule, m):
    w = quadrature.weights(m, 0.25, rule)
    assert np.isclose(w.sum(), 0.25 * (m - 1))


def test_simpson_needs_odd_count_and_known_rules():
    with pytest.raises(ValueError):
        quadrature.weights(4, 0.1, "simpson")
    with pytest.raises(ValueError):
        quadrature.weights(5, 0.1, "midpoint")


def test_simpson_exact_for_cubics():
    x = np.linspace(0, 2, 9)
    f = 3 * x ** 3 - x ** 2 + 2
    assert np.isclose(quadrature.integrate(f, x[1] - x[0], "simpson"), 3 * 4 - 8 / 3 + 4, rtol=1e-14)


def test_cumulative_exact_for_cubics_at_every_index():
    x = np.linspace(0, 1.4, 15)
    f = x ** 3 - 2 * x + 0.5
    exact = x ** 4 / 4 - x ** 2 + 0.5 * x
    got = quadrature.cumulative(f, x[1] - x[0], "simpson")
    # index 1 uses a quadratic rule, so allow its small cubic error
    assert np.allclose(got[2:], exact[2:], atol=1e-14)
    assert abs(got[1] - exact[1]) < 1e-4


def test_cumulative_fourth_order():
    errs = []
    for m in (17, 33, 65):
        x = np.linspace(0, 2, m)
        got = quadrature.cumulative(np.cos(3 * x), x[1] - x[0], "simpson")
        errs.append(np.max(np.abs(got - np.sin(3 * x) / 3)))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(ratios > 12)


def test_cumulative_handles_field_axes():
    x = np.linspace(0, 1, 11)
    vals = np.stack([np.exp(x), 2 * np.exp(x)], axis=1)
    got = quadrature.cumulative(vals, 0.1, "simpson")
    assert got.shape == vals.shape
    assert np.allclose(got[:, 1], 2 * got[:, 0])


def test_trapezoid_cumulative():
    x = np.linspace(0, 1, 11)
    assert np.allclose(quadrature.cumulative(2 * x, 0.1, "trapezoid"), x ** 2)


def test_gauss4_composite():
    errs = [abs(quadrature.gauss4(np.exp, 0.0, 1.0, k) - (np.e - 1)) for k in (4, 8)]
    assert errs[1] < 1e-6
    assert 14 < errs[0] / errs[1] < 18
    arr = quadrature.gauss4(lambda s: np.array([s ** 3, 1.0]), 0.0, 2.0, 1)
    assert np.allclose(arr, [4.0, 2.0])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=4, max_size=4), st.sampled_from([3, 5, 7, 9, 11]))
def test_cubic_exactness_property(coefs, m):
    a, b, c, d = coefs
    x = np.linspace(0, 1, m)
    f = a + b * x + c * x ** 2 + d * x ** 3
    exact = a + b / 2 + c / 3 + d / 4
    got = quadrature.integrate(f, x[1] - x[0], "simpson")
    assert abs(got - exact) <= 1e-12 * (1 + sum(abs(v) for v in coefs))
