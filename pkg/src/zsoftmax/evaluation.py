"""GZSL / ZSL accuracy metrics."""
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidParameterError
from .model import scores


def harmonic(a_seen, a_unseen):
    total = a_seen + a_unseen
    return 2.0 * a_seen * a_unseen / total if total > 0 else 0.0


@dataclass(frozen=True)
class GzslMetrics:
    a_seen: float
    a_unseen: float

    @property
    def a_harmonic(self):
        return harmonic(self.a_seen, self.a_unseen)

    def as_dict(self):
        return {"a_seen": self.a_seen, "a_unseen": self.a_unseen, "a_harmonic": self.a_harmonic}


def per_class_accuracy(predictions, truths, class_set=None):
    """Macro accuracy: mean over classes (present in ``truths``) of that class's hit rate."""
    pred = np.asarray(predictions).reshape(-1)
    true = np.asarray(truths).reshape(-1)
    if pred.shape != true.shape:
        raise InvalidParameterError(f"{pred.size} predictions for {true.size} truths")
    if true.size == 0:
        raise InvalidParameterError("no samples to score")
    classes = np.unique(true)
    if class_set is not None:
        allowed = np.asarray(list(class_set))
        if not np.isin(classes, allowed).all():
            raise InvalidParameterError("truth labels outside class_set")
        classes = classes[np.isin(classes, allowed)]
    hits = pred == true
    return float(np.mean([hits[true == k].mean() for k in classes]))


def _require(feature_set, what):
    if len(feature_set) == 0:
        raise InvalidParameterError(f"empty {what} set")


def predict_gzsl(params, X):
    return np.argmax(scores(X, params), axis=1)


def predict_zsl(params, X):
    cs = params.attrs.num_seen
    return cs + np.argmax(scores(X, params)[:, cs:], axis=1)


def evaluate_gzsl(params, test_seen, test_unseen):
    """Seen/unseen per-class accuracy when predicting over all classes."""
    _require(test_seen, "seen test")
    _require(test_unseen, "unseen test")
    cs, c = params.attrs.num_seen, params.attrs.num_classes
    a_s = per_class_accuracy(predict_gzsl(params, test_seen.features), test_seen.labels, range(cs))
    a_u = per_class_accuracy(predict_gzsl(params, test_unseen.features), test_unseen.labels,
                             range(cs, c))
    return GzslMetrics(a_s, a_u)


def evaluate_zsl(params, test_unseen):
    """Per-class accuracy with the argmax restricted to unseen classes."""
    _require(test_unseen, "unseen test")
    cs, c = params.attrs.num_seen, params.attrs.num_classes
    return per_class_accuracy(predict_zsl(params, test_unseen.features), test_unseen.labels,
                              range(cs, c))
