"""Visual-to-attribute MLP with a frozen attribute-matrix softmax head.

Forward pass for a batch ``X`` (n x d)::

    hidden = act(X @ W1.T + b1)           # n x h
    embed  = hidden @ W2.T + b2           # n x a   (linear second layer)
    scores = embed @ A                    # n x C   (A frozen)
    proba  = softmax(scores)
"""
import struct
from dataclasses import dataclass

import numpy as np

from .data import AttributeMatrix
from .exceptions import FormatError, InvalidParameterError, ShapeError
from .numeric import ACTIVATIONS, activation, activation_grad, log_softmax, softmax

LOG_FLOOR = np.log(1e-300)

CHECKPOINT_MAGIC = b"ZSFM"
CHECKPOINT_VERSION = 1
_CHECKPOINT_HEADER = struct.Struct("<4sIIIIIIB")


@dataclass
class ModelParams:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    activation: str
    attrs: AttributeMatrix

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise InvalidParameterError(f"unknown activation {self.activation!r}")
        h, d = self.W1.shape
        a = self.attrs.dim_a
        if self.b1.shape != (h,) or self.W2.shape != (a, h) or self.b2.shape != (a,):
            raise ShapeError(
                f"inconsistent parameter shapes W1{self.W1.shape} b1{self.b1.shape} "
                f"W2{self.W2.shape} b2{self.b2.shape} for attribute dim {a}")

    @property
    def dim_d(self):
        return self.W1.shape[1]

    @property
    def hidden_size(self):
        return self.W1.shape[0]

    def trainables(self):
        return {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": self.b2}

    def copy(self):
        return ModelParams(self.W1.copy(), self.b1.copy(), self.W2.copy(), self.b2.copy(),
                           self.activation, self.attrs)


@dataclass(frozen=True)
class RegConfig:
    lambda_l2: float = 0.0
    gamma_l1: float = 0.0

    def __post_init__(self):
        if not (self.lambda_l2 >= 0 and self.gamma_l1 >= 0):
            raise InvalidParameterError("regularization factors must be non-negative")


@dataclass
class Gradients:
    dW1: np.ndarray
    db1: np.ndarray
    dW2: np.ndarray
    db2: np.ndarray

    def as_dict(self):
        return {"W1": self.dW1, "b1": self.db1, "W2": self.dW2, "b2": self.db2}


def init_params(dim_d, hidden_size, attrs, activation="relu", seed=0, rng=None):
    """Glorot-uniform weights, zero biases."""
    if rng is None:
        rng = np.random.default_rng(seed)

    def glorot(fan_out, fan_in):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=(fan_out, fan_in))

    W1 = glorot(hidden_size, dim_d)
    W2 = glorot(attrs.dim_a, hidden_size)
    return ModelParams(W1, np.zeros(hidden_size), W2, np.zeros(attrs.dim_a), activation, attrs)


def _as_batch(x, params):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.ndim != 2 or x.shape[1] != params.dim_d:
        raise ShapeError(f"expected inputs with {params.dim_d} features, got shape {x.shape}")
    return x, single


def _forward(X, params):
    pre = X @ params.W1.T + params.b1
    hidden = activation(params.activation, pre)
    emb = hidden @ params.W2.T + params.b2
    return pre, hidden, emb, emb @ params.attrs.matrix


def embed(x, params):
    X, single = _as_batch(x, params)
    emb = _forward(X, params)[2]
    return emb[0] if single else emb


def scores(x, params):
    X, single = _as_batch(x, params)
    s = _forward(X, params)[3]
    return s[0] if single else s


def predict_proba(x, params):
    return softmax(scores(x, params), axis=-1)


def _check_batch(X, Y, params):
    X, _ = _as_batch(X, params)
    if X.shape[0] == 0:
        raise InvalidParameterError("empty batch")
    Y = np.asarray(Y, dtype=np.float64)
    if Y.shape != (X.shape[0], params.attrs.num_classes):
        raise ShapeError(f"label matrix shape {Y.shape} does not match batch "
                         f"({X.shape[0]}, {params.attrs.num_classes})")
    return X, Y


def penalty(params, reg):
    """lambda*(|W1|_F^2 + |W2|_F^2) + gamma*(|W1|_1 + |W2|_1); biases are not penalized."""
    w1, w2 = params.W1, params.W2
    return (reg.lambda_l2 * (np.sum(w1 * w1) + np.sum(w2 * w2))
            + reg.gamma_l1 * (np.abs(w1).sum() + np.abs(w2).sum()))


def cross_entropy(X, Y, params):
    X, Y = _check_batch(X, Y, params)
    logp = np.maximum(log_softmax(_forward(X, params)[3]), LOG_FLOOR)
    return float(-(Y * logp).sum(axis=1).mean())


def loss(X, Y, params, reg=RegConfig()):
    """Mean soft-label cross-entropy over the batch plus weight penalties.

    ``Y`` holds one label distribution per sample (n x C).
    """
    return cross_entropy(X, Y, params) + float(penalty(params, reg))


def gradients(X, Y, params, reg=RegConfig()):
    X, Y = _check_batch(X, Y, params)
    n = X.shape[0]
    pre, hidden, _, s = _forward(X, params)
    # softmax + cross-entropy: d/ds = p - y (labels sum to one)
    d_scores = (softmax(s, axis=1) - Y) / n
    d_emb = d_scores @ params.attrs.matrix.T
    dW2 = d_emb.T @ hidden
    db2 = d_emb.sum(axis=0)
    d_pre = (d_emb @ params.W2) * activation_grad(params.activation, pre)
    dW1 = d_pre.T @ X
    db1 = d_pre.sum(axis=0)
    if reg.lambda_l2:
        dW1 = dW1 + 2.0 * reg.lambda_l2 * params.W1
        dW2 = dW2 + 2.0 * reg.lambda_l2 * params.W2
    if reg.gamma_l1:
        dW1 = dW1 + reg.gamma_l1 * np.sign(params.W1)
        dW2 = dW2 + reg.gamma_l1 * np.sign(params.W2)
    return Gradients(dW1, db1, dW2, db2)


def loss_decomposition(X, Y, params):
    """Split the cross-entropy into a seen-class and an unseen-class part.

    Labels and probabilities are each renormalized within the seen and the
    unseen block; returns batch means ``(seen_ce, unseen_ce)``. They recombine as::

        ce = (1-q)*seen_ce + q*unseen_ce - (1-q)*log P_seen - q*log P_unseen

    where ``P_seen``/``P_unseen`` are the predicted block masses. A block with
    zero label mass contributes 0.
    """
    X, Y = _check_batch(X, Y, params)
    cs = params.attrs.num_seen
    logp = np.maximum(log_softmax(_forward(X, params)[3]), LOG_FLOOR)
    parts = []
    for block in (slice(0, cs), slice(cs, None)):
        y = Y[:, block]
        mass = y.sum(axis=1, keepdims=True)
        y_bar = np.divide(y, mass, out=np.zeros_like(y), where=mass > 0)
        lp = logp[:, block]
        log_block = np.logaddexp.reduce(lp, axis=1, keepdims=True)
        parts.append(float(-(y_bar * (lp - log_block)).sum(axis=1).mean()))
    return parts[0], parts[1]


# -- checkpoint ------------------------------------------------------------

def checkpoint_to_bytes(params):
    h, d = params.W1.shape
    attrs = params.attrs
    header = _CHECKPOINT_HEADER.pack(
        CHECKPOINT_MAGIC, CHECKPOINT_VERSION, d, h, attrs.dim_a,
        attrs.num_seen, attrs.num_unseen, ACTIVATIONS.index(params.activation))
    body = b"".join(np.ascontiguousarray(m, dtype="<f8").tobytes()
                    for m in (params.W1, params.b1, params.W2, params.b2, attrs.matrix))
    return header + body


def checkpoint_from_bytes(buf):
    if len(buf) < _CHECKPOINT_HEADER.size:
        raise FormatError("truncated checkpoint header")
    magic, version, d, h, a, cs, cu, act = _CHECKPOINT_HEADER.unpack_from(buf)
    if magic != CHECKPOINT_MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    if act >= len(ACTIVATIONS):
        raise FormatError(f"unknown activation code {act}")
    shapes = [(h, d), (h,), (a, h), (a,), (a, cs + cu)]
    sizes = [int(np.prod(s)) for s in shapes]
    expected = _CHECKPOINT_HEADER.size + 8 * sum(sizes)
    if len(buf) != expected:
        raise FormatError(f"checkpoint size {len(buf)} != expected {expected}")
    arrays, off = [], _CHECKPOINT_HEADER.size
    for shape, size in zip(shapes, sizes):
        arrays.append(np.frombuffer(buf, dtype="<f8", count=size, offset=off)
                      .reshape(shape).astype(np.float64))
        off += 8 * size
    W1, b1, W2, b2, A = arrays
    return ModelParams(W1, b1, W2, b2, ACTIVATIONS[act], AttributeMatrix(A, cs))


def save_checkpoint(params, path):
    with open(path, "wb") as fh:
        fh.write(checkpoint_to_bytes(params))


def load_checkpoint(path):
    with open(path, "rb") as fh:
        return checkpoint_from_bytes(fh.read())
