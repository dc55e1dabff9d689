"""Dense kernels shared by the model, soft labels and trainer.

Everything is float64 numpy. Functions accept 1-d vectors or 2-d batches
(one vector per row) unless stated otherwise.
"""
import numpy as np

from .exceptions import InvalidParameterError, ShapeError

ACTIVATIONS = ("tanh", "sigmoid", "hard-sigmoid", "relu")


def matmul(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def softmax(v, tau=1.0, axis=-1):
    """Temperature softmax, max-subtracted so large inputs do not overflow."""
    if not tau > 0:
        raise InvalidParameterError(f"tau must be positive, got {tau}")
    z = np.asarray(v, dtype=np.float64) / tau
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(v, axis=-1):
    z = np.asarray(v, dtype=np.float64)
    z = z - z.max(axis=axis, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=axis, keepdims=True))


def _check_name(name):
    if name not in ACTIVATIONS:
        raise InvalidParameterError(
            f"unknown activation {name!r}; expected one of {', '.join(ACTIVATIONS)}")


def _sigmoid(x):
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def activation(name, x):
    _check_name(name)
    x = np.asarray(x, dtype=np.float64)
    if name == "tanh":
        return np.tanh(x)
    if name == "sigmoid":
        return _sigmoid(x)
    if name == "hard-sigmoid":
        return np.clip(0.2 * x + 0.5, 0.0, 1.0)
    return np.maximum(x, 0.0)


def activation_grad(name, x):
    """Elementwise derivative of ``activation(name, x)``.

    Kinks (relu at 0, hard-sigmoid at +-2.5) get derivative 0.
    """
    _check_name(name)
    x = np.asarray(x, dtype=np.float64)
    if name == "tanh":
        t = np.tanh(x)
        return 1.0 - t * t
    if name == "sigmoid":
        s = _sigmoid(x)
        return s * (1.0 - s)
    if name == "hard-sigmoid":
        return np.where(np.abs(x) < 2.5, 0.2, 0.0)
    return (x > 0).astype(np.float64)
