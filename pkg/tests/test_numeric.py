import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from zsoftmax.exceptions import InvalidParameterError, ShapeError
from zsoftmax.numeric import ACTIVATIONS, activation, activation_grad, matmul, softmax

finite = st.floats(-50, 50, allow_nan=False)


def triple_loop(a, b):
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            for k in range(a.shape[1]):
                out[i, j] += a[i, k] * b[k, j]
    return out


def test_matmul_identity_and_hand_example():
    b = np.array([[5.0, 6.0], [7.0, 8.0]])
    assert np.array_equal(matmul(np.eye(2), b), b)
    assert np.array_equal(matmul([[1, 2], [3, 4]], b), [[19, 22], [43, 50]])


def test_matmul_matches_triple_loop(rng):
    a, b = rng.standard_normal((5, 7)), rng.standard_normal((7, 3))
    np.testing.assert_allclose(matmul(a, b), triple_loop(a, b), rtol=1e-12, atol=1e-12)


def test_matmul_shape_error_names_shapes():
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_matmul_associative(rng):
    for _ in range(10):
        a, b, c = (rng.standard_normal((8, 8)) for _ in range(3))
        left, right = matmul(matmul(a, b), c), matmul(a, matmul(b, c))
        assert np.max(np.abs(left - right)) <= 1e-9 * np.max(np.abs(left))


@pytest.mark.parametrize("c", [-1e3, 0.0, 7.5, 1e3])
def test_softmax_constant_is_uniform(c):
    np.testing.assert_allclose(softmax([c, c, c]), [1 / 3] * 3, rtol=0, atol=1e-15)


def test_softmax_analytic_and_low_temperature():
    np.testing.assert_allclose(softmax([np.log(1), np.log(3)]), [0.25, 0.75], atol=1e-15)
    p = softmax([1.0, 0.0], tau=0.001)
    assert p[0] == pytest.approx(1.0) and p[1] < 1e-300


def test_softmax_rejects_bad_tau():
    for tau in (0, -1):
        with pytest.raises(InvalidParameterError):
            softmax([1.0, 2.0], tau=tau)


def test_softmax_no_overflow():
    p = softmax([1e300, -1e300, 0.0])
    assert np.all(np.isfinite(p)) and p[0] == 1.0


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, st.integers(1, 12), elements=finite),
       st.floats(1e-3, 100), st.floats(-100, 100))
def test_softmax_properties(v, tau, shift):
    p = softmax(v, tau)
    assert abs(p.sum() - 1.0) <= 1e-12
    assert np.all((p >= 0) & (p <= 1.0))
    np.testing.assert_allclose(softmax(v + shift, tau), p, rtol=1e-9, atol=1e-15)
    top = np.sort(v)[::-1]
    if v.size == 1 or (top[0] - top[1]) / tau > 1e-9:
        assert np.argmax(p) == np.argmax(v)


def test_activation_values():
    assert activation("relu", [-2.0, 3.0]).tolist() == [0.0, 3.0]
    assert activation("sigmoid", [0.0])[0] == 0.5
    assert activation("tanh", [0.0])[0] == 0.0
    assert activation("hard-sigmoid", [0.0, 10.0, -10.0]).tolist() == [0.5, 1.0, 0.0]


def test_activation_kink_conventions():
    assert activation_grad("relu", [0.0])[0] == 0.0
    assert activation_grad("hard-sigmoid", [2.5, -2.5]).tolist() == [0.0, 0.0]


def test_sigmoid_extremes_are_finite():
    out = activation("sigmoid", [-1000.0, 1000.0])
    assert out.tolist() == [0.0, 1.0]


def test_unknown_activation():
    with pytest.raises(InvalidParameterError):
        activation("softplus", [0.0])
    with pytest.raises(InvalidParameterError):
        activation_grad("softplus", [0.0])


@pytest.mark.parametrize("name", ACTIVATIONS)
def test_activation_grad_matches_central_difference(name, rng):
    kinks = {"relu": [0.0], "hard-sigmoid": [-2.5, 2.5]}.get(name, [])
    x = rng.uniform(-4, 4, size=500)
    for k in kinks:
        x = x[np.abs(x - k) > 1e-3]
    h = 1e-6
    fd = (activation(name, x + h) - activation(name, x - h)) / (2 * h)
    np.testing.assert_allclose(activation_grad(name, x), fd, rtol=0, atol=1e-6)
