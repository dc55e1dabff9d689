"""Mini-batch SGD on the soft-labeled objective, and grid-search model selection."""
import csv
import logging
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .data import AttributeMatrix, FeatureSet, check_seen_only, l2_normalize, standardize
from .evaluation import evaluate_gzsl
from .exceptions import InvalidParameterError, TrainingError
from .model import RegConfig, gradients, init_params, loss
from .numeric import ACTIVATIONS
from .softlabel import SoftLabelConfig, build_table

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    hidden_size: int = 128
    activation: str = "relu"
    tau: float = 0.5
    q: float = 0.3
    mode: str = "DU"
    learning_rate: float = 0.05
    epochs: int = 100
    batch_size: int = 64
    lambda_l2: float = 0.0
    gamma_l1: float = 0.0
    seed: int = 0
    standardize: bool = True
    l2_normalize: bool = False

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise InvalidParameterError(f"unknown activation {self.activation!r}")
        if not self.learning_rate >= 0:
            raise InvalidParameterError("learning_rate must be >= 0")
        if self.epochs < 1 or self.batch_size < 1 or self.hidden_size < 1:
            raise InvalidParameterError("epochs, batch_size and hidden_size must be >= 1")
        # validates mode/q/tau
        object.__setattr__(self, "mode", self.softlabel_config.mode)
        self.reg_config

    @property
    def softlabel_config(self):
        return SoftLabelConfig(mode=self.mode, q=self.q, tau=self.tau)

    @property
    def reg_config(self):
        return RegConfig(self.lambda_l2, self.gamma_l1)

    def replace(self, **changes):
        return replace(self, **changes)

    def as_dict(self):
        return asdict(self)


@dataclass
class TrainHistory:
    loss: list = field(default_factory=list)
    val_ah: list = field(default_factory=list)

    def __len__(self):
        return len(self.loss)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "loss", "val_ah"])
            for epoch, (l, ah) in enumerate(zip(self.loss, self.val_ah), start=1):
                w.writerow([epoch, repr(l), "" if ah is None else repr(ah)])


def _rngs(seed):
    init_seq, shuffle_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(init_seq), np.random.default_rng(shuffle_seq)


def _fold_affine(params, mean, scale):
    """Absorb ``(x - mean) / scale`` into the first layer so the model takes raw features."""
    W1 = params.W1 / scale
    b1 = params.b1 - W1 @ mean
    return replace(params, W1=W1, b1=b1)


def train(config, attrs, train_set, val_sets=None):
    """Fit the embedding network with plain SGD.

    ``val_sets`` is an optional ``(val_seen, val_unseen)`` pair scored with
    GZSL harmonic accuracy after each epoch. Returns ``(params, history)``.
    Standardization is folded into the first layer, so the returned params take
    raw features; l2 normalization is not affine and must be applied by the caller.
    """
    if len(train_set) == 0:
        raise InvalidParameterError("empty training set")
    check_seen_only(train_set, attrs.num_seen)
    if train_set.num_classes != attrs.num_classes:
        raise InvalidParameterError(
            f"training set declares {train_set.num_classes} classes, attributes have "
            f"{attrs.num_classes}")

    sets = [train_set] + list(val_sets or ())
    if config.l2_normalize:
        sets = [l2_normalize(s) for s in sets]
    mean = scale = None
    if config.standardize:
        sets, mean, scale = standardize(sets[0], sets[1:])
    data, vals = sets[0], sets[1:]

    init_rng, shuffle_rng = _rngs(config.seed)
    params = init_params(data.dim_d, config.hidden_size, attrs, config.activation, rng=init_rng)
    table = build_table(attrs, config.softlabel_config)
    reg = config.reg_config
    X, Y = data.features, table[data.labels]
    n = len(data)
    history = TrainHistory()

    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(n)
        total = 0.0
        for b, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start:start + config.batch_size]
            xb, yb = X[idx], Y[idx]
            batch_loss = loss(xb, yb, params, reg)
            if not np.isfinite(batch_loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {b}")
            total += batch_loss * len(idx)
            if config.learning_rate:
                g = gradients(xb, yb, params, reg)
                params.W1 = params.W1 - config.learning_rate * g.dW1
                params.b1 = params.b1 - config.learning_rate * g.db1
                params.W2 = params.W2 - config.learning_rate * g.dW2
                params.b2 = params.b2 - config.learning_rate * g.db2
        history.loss.append(total / n)
        history.val_ah.append(
            evaluate_gzsl(params, vals[0], vals[1]).a_harmonic if len(vals) == 2 else None)
        logger.debug("epoch %d loss %.6f", epoch, history.loss[-1])

    if config.standardize:
        params = _fold_affine(params, mean, scale)
    return params, history


def make_validation_split(attrs, train_set, num_val_unseen=None, val_fraction=0.2, seed=0):
    """Carve a GZSL validation problem out of seen-class training data.

    A random subset of seen classes plays the unseen role; the remaining seen
    classes lose ``val_fraction`` of their samples to a held-out seen split.
    Returns ``(val_attrs, sub_train, val_seen, val_unseen)`` indexed for ``val_attrs``.
    """
    rng = np.random.default_rng(seed)
    cs = attrs.num_seen
    if num_val_unseen is None:
        num_val_unseen = max(1, round(cs * attrs.num_unseen / attrs.num_classes))
    if not 1 <= num_val_unseen < cs:
        raise InvalidParameterError("num_val_unseen must leave at least one seen class")
    perm = rng.permutation(cs)
    keep, held = np.sort(perm[num_val_unseen:]), np.sort(perm[:num_val_unseen])
    order = np.concatenate([keep, held])
    remap = np.full(attrs.num_classes, -1)
    remap[order] = np.arange(order.size)
    val_attrs = AttributeMatrix(attrs.matrix[:, order], len(keep),
                                tuple(attrs.class_names[k] for k in order))
    c = order.size

    x, y = train_set.features, train_set.labels
    tr_idx, vs_idx = [], []
    for k in keep:
        idx = rng.permutation(np.flatnonzero(y == k))
        n_val = int(round(val_fraction * idx.size))
        vs_idx.extend(idx[:n_val])
        tr_idx.extend(idx[n_val:])
    vu_idx = np.flatnonzero(np.isin(y, held))
    tr_idx, vs_idx = np.sort(tr_idx).astype(int), np.sort(vs_idx).astype(int)

    def subset(ix):
        return FeatureSet(x[ix].reshape(-1, x.shape[1]), remap[y[ix]], c)

    return val_attrs, subset(tr_idx), subset(vs_idx), subset(vu_idx)


def cross_validate(grid, attrs, train_set, val_split):
    """Train every config and keep the one with the best validation harmonic accuracy.

    ``val_split`` is ``(val_seen, val_unseen)`` labelled against ``attrs``.
    Ties go to the earlier grid entry. Returns ``(best_config, results)`` with
    ``results`` a list of ``(config, GzslMetrics)`` in grid order.
    """
    grid = list(grid)
    if not grid:
        raise InvalidParameterError("empty hyperparameter grid")
    val_seen, val_unseen = val_split
    results = []
    for config in grid:
        params, _ = train(config, attrs, train_set)
        if config.l2_normalize:
            val_seen_in, val_unseen_in = l2_normalize(val_seen), l2_normalize(val_unseen)
        else:
            val_seen_in, val_unseen_in = val_seen, val_unseen
        metrics = evaluate_gzsl(params, val_seen_in, val_unseen_in)
        logger.info("cv %s -> A_H=%.4f", config, metrics.a_harmonic)
        results.append((config, metrics))
    best = max(range(len(results)), key=lambda i: (results[i][1].a_harmonic, -i))
    return results[best][0], results
