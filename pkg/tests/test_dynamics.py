import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from netsync import dynamics as dy
from netsync import pseudometric as pm
from netsync.domain import DomainDescriptor, Sampler
from netsync.stability import _field_form


def test_fhn_examples():
    m = dy.fhn_field(0, 1, 0, 0)
    np.testing.assert_array_equal(m.field(1, [0, 0]), [0, 0])
    np.testing.assert_array_equal(m.field(1, [1, 0]), [0, 1])
    np.testing.assert_array_equal(dy.fhn_field(1, 2, 3, 4).field(1, [2, 1]), [-6, -3])


@pytest.mark.parametrize("b", [0.0, -1.0])
def test_fhn_requires_positive_b(b):
    with pytest.raises(dy.ModelError, match="b > 0"):
        dy.fhn_field(b=b)


def test_fhn_override_validated():
    with pytest.raises(dy.ModelError, match="node 3"):
        dy.fhn_field(b=1, overrides={3: {"b": -1}})
    with pytest.raises(dy.ModelError):
        dy.fhn_field(overrides={2: {"q": 1}})


def test_heterogeneous_params_per_node():
    m = dy.fhn_field(a=0.0, overrides={2: {"a": 0.5}})
    assert m.heterogeneous
    X = np.zeros((3, 2))
    out = m.func(X, 0.0, m.param_arrays([1, 2, 3]))
    np.testing.assert_array_equal(out[:, 0], [0, 0.5, 0])


def test_chua_f_example():
    assert dy.chua_f(1.0, 0.1, 0.5) == pytest.approx(-0.3, abs=1e-15)
    assert dy.chua_f(0.0, 0.1, 0.5) == 0.0


def test_chua_f_matches_absolute_value_form():
    x = np.linspace(-4, 4, 8001)
    for d, e in [(0.1, 0.5), (1, 3), (-0.5, 0)]:
        ref = d * x + 0.5 * (d - e) * (np.abs(x + 1) - np.abs(x - 1))
        np.testing.assert_allclose(dy.chua_f(x, d, e), ref, atol=1e-14)


def test_chua_examples():
    np.testing.assert_array_equal(dy.chua_field(1, 1, 1, 0.1, 0.5).field(1, [0, 0, 0]), [0, 0, 0])
    np.testing.assert_array_equal(dy.chua_field(2, 1, 1, 0.1, 0.5).field(1, [0, 1, 0]), [2, -1, -1])


@pytest.mark.parametrize("params,name", [
    ((0, 1, 1, 0, 1), "a"), ((1, 0, 1, 0, 1), "b"), ((1, 1, -1, 0, 1), "c"), ((1, 1, 1, 1, 2), "2d < e"),
])
def test_chua_constraints_named(params, name):
    with pytest.raises(dy.ModelError, match=name):
        dy.chua_field(*params)


@pytest.mark.parametrize("d,e,expected", [(0.1, 0.5, 0.1), (-0.5, 0, 0.0), (1, 3, 1.0)])
def test_chua_slope_bound_examples(d, e, expected):
    assert dy.chua_slope_bound(d, e) == expected


def test_chua_secant_property():
    rng = np.random.default_rng(0)
    for d, e in [(0.1, 0.5), (1, 3), (-0.5, 0), (0.3, 2.0)]:
        delta = dy.chua_slope_bound(d, e)
        x = rng.uniform(-3, 3, 10_000)
        y = x + rng.uniform(-1, 1, 10_000)
        lhs = (x - y) * (dy.chua_f(x, d, e) - dy.chua_f(y, d, e))
        assert np.all(lhs <= delta * (x - y) ** 2 + 1e-12)


def test_fhn_coupling_examples():
    h = dy.fhn_coupling(1, 1, 1)
    np.testing.assert_allclose(h([1, 0], [0, 0]), [2, 0], atol=1e-15)
    np.testing.assert_array_equal(h([3, -1], [3, -1]), [0, 0])
    np.testing.assert_allclose(dy.fhn_coupling(1, 1, 3)([-1, 2], [0, 0]), [-2, 6], atol=1e-15)


def test_fhn_coupling_constraints():
    for args in [(0.5, 0, 1), (1, -1, 1), (1, 0, -0.1)]:
        with pytest.raises(dy.ModelError):
            dy.fhn_coupling(*args)
    with pytest.raises(dy.ModelError, match="-c"):
        dy.fhn_coupling(1, 0, 0.5, c=-1)
    dy.fhn_coupling(1, 0, 1, c=-1)


def test_five_thirds_power_is_odd():
    u = np.linspace(-3, 3, 601)
    h = dy.fhn_coupling(1, 1, 1)
    tail = h(np.stack([u, 0 * u], -1), np.zeros((601, 2)))[:, 0] - u
    np.testing.assert_allclose(tail, np.sign(u) * np.abs(u) ** (5 / 3), rtol=1e-13, atol=1e-15)


def test_chua_coupling_examples():
    np.testing.assert_array_equal(dy.chua_coupling(1, 1)([0.3, 1, 2], [0.3, 5, 5]), [0, 0, 0])
    np.testing.assert_allclose(dy.chua_coupling(1, 1)([1, 0, 0], [0, 0, 0]), [1, 0, 0])
    np.testing.assert_allclose(dy.chua_coupling(2, 0.5)([-0.5, 0, 0], [0, 0, 0]),
                               [-0.5 * math.exp(0.5), 0, 0], rtol=1e-15)
    assert round(float(dy.chua_coupling(2, 0.5)([-0.5, 0, 0], [0, 0, 0])[0]), 4) == -0.8244


def test_chua_coupling_constraints():
    with pytest.raises(dy.ModelError):
        dy.chua_coupling(0, 1)
    with pytest.raises(dy.ModelError):
        dy.chua_coupling(1, -1)


@given(
    x=st.lists(st.floats(-50, 50), min_size=3, max_size=3),
    y=st.lists(st.floats(-50, 50), min_size=3, max_size=3),
)
def test_couplings_antisymmetric_exactly(x, y):
    h = dy.chua_coupling(9, 1)
    assert np.all(h(x, y) + h(y, x) == 0)
    g = dy.fhn_coupling(1.5, 2, 0.7)
    assert np.all(g(x[:2], y[:2]) + g(y[:2], x[:2]) == 0)


def test_weights_positive():
    np.testing.assert_array_equal(dy.fhn_weights(0.5), [1, 2])
    np.testing.assert_allclose(dy.chua_weights(9, 14), [1 / 9, 1, 1 / 14])
    with pytest.raises(dy.ModelError):
        dy.as_weights([1, 0])
    with pytest.raises(dy.ModelError):
        dy.as_weights([1, 1], dimension=3)


def test_fhn_dissipativity_sampled():
    b = 0.1
    model = dy.fhn_field(0.3, b, 0.05, 0)
    h = dy.fhn_coupling(1, 1, 1)
    phi = pm.induced_pseudometric(h, dy.fhn_weights(b), pm.RhoSequence.power(5 / 3))
    X, Y = Sampler(DomainDescriptor.box([-5, -5], [5, 5]), 3).pairs(100_000)
    lhs = _field_form(model, dy.fhn_weights(b), 1, 1, X, Y, 0.0)
    assert np.all(lhs <= phi(X, Y) + 1e-10 * np.maximum(1, np.abs(lhs)))


def test_chua_dissipativity_sampled():
    a, b, c, d, e = 9, 14, 0.01, 1, 3
    delta = dy.chua_slope_bound(d, e)
    w = dy.chua_weights(a, b)
    model = dy.chua_field(a, b, c, d, e)
    r = pm.EXP_DAMPED_RADIUS
    X, Y = Sampler(DomainDescriptor.box([-5] * 3, [5] * 3), 4, (r, None, None)).pairs(100_000)
    lhs = _field_form(model, w, 1, 1, X, Y, 0.0)
    u = X[:, 0] - Y[:, 0]
    assert np.all(lhs <= delta * u * u * np.exp(1 - np.abs(u)) + 1e-10 * np.maximum(1, np.abs(lhs)))


def test_linear_coupling():
    h = dy.linear_coupling(2)
    np.testing.assert_array_equal(h([1, 2], [3, 5]), [-2, -3])
