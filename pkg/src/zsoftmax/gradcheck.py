"""Central finite-difference check of the analytic gradients."""
import numpy as np

from .data import AttributeMatrix
from .model import RegConfig, gradients, init_params, loss
from .numeric import ACTIVATIONS
from .softlabel import SoftLabelConfig, build_table

# relative errors are measured against max(|analytic|, |numeric|, REL_FLOOR)
REL_FLOOR = 1e-6


def finite_difference(X, Y, params, reg, h=1e-5):
    """Central differences of ``loss`` for every trainable entry."""
    out = {}
    for name, arr in params.trainables().items():
        g = np.zeros_like(arr)
        flat, gflat = arr.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = loss(X, Y, params, reg)
            flat[i] = orig - h
            down = loss(X, Y, params, reg)
            flat[i] = orig
            gflat[i] = (up - down) / (2 * h)
        out[name] = g
    return out


def max_relative_error(X, Y, params, reg, h=1e-5, perturb=0.0):
    analytic = gradients(X, Y, params, reg).as_dict()
    if perturb:
        analytic["W1"] = analytic["W1"] * (1.0 + perturb)
    numeric = finite_difference(X, Y, params, reg, h)
    worst = 0.0
    for name, a in analytic.items():
        n = numeric[name]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), REL_FLOOR)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def random_instance(rng, activation, dim_d=6, hidden=5, dim_a=4, num_seen=3, num_unseen=2,
                    batch=8, q=0.3, tau=0.5):
    c = num_seen + num_unseen
    attrs = AttributeMatrix(rng.standard_normal((dim_a, c)), num_seen)
    params = init_params(dim_d, hidden, attrs, activation, rng=rng)
    params.b1 = 0.1 * rng.standard_normal(hidden)
    params.b2 = 0.1 * rng.standard_normal(dim_a)
    X = rng.standard_normal((batch, dim_d))
    labels = rng.integers(0, num_seen, size=batch)
    Y = build_table(attrs, SoftLabelConfig("DU", q, tau))[labels]
    return X, Y, params


def run(seed=0, instances=20, lambda_l2=0.01, gamma_l1=0.01, h=1e-5, perturb=0.0):
    """Worst relative error over random instances cycling through every activation."""
    rng = np.random.default_rng(seed)
    reg = RegConfig(lambda_l2, gamma_l1)
    worst = 0.0
    for i in range(instances):
        X, Y, params = random_instance(rng, ACTIVATIONS[i % len(ACTIVATIONS)])
        worst = max(worst, max_relative_error(X, Y, params, reg, h, perturb))
    return worst
