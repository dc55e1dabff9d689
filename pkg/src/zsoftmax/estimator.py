"""scikit-learn compatible front end.

    clf = ZSoftmaxClassifier(attributes=attrs, q=0.2, tau=0.5).fit(X_train, y_train)
    clf.predict(X_test)          # argmax over seen + unseen classes
    clf.predict_unseen(X_test)   # argmax over unseen classes only
"""
import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import AttributeMatrix, FeatureSet
from .evaluation import per_class_accuracy, predict_gzsl, predict_zsl
from .exceptions import InvalidParameterError
from .model import predict_proba, scores
from .train import TrainConfig, train


def as_attribute_matrix(attributes, num_seen=None):
    if isinstance(attributes, AttributeMatrix):
        if num_seen is not None and num_seen != attributes.num_seen:
            raise InvalidParameterError("num_seen disagrees with the AttributeMatrix")
        return attributes
    if attributes is None or num_seen is None:
        raise InvalidParameterError(
            "attributes must be an AttributeMatrix, or an (a x C) array together with num_seen")
    return AttributeMatrix(np.asarray(attributes, dtype=np.float64), int(num_seen))


class ZSoftmaxClassifier(ClassifierMixin, BaseEstimator):
    """Soft-labeled softmax classifier over seen and unseen classes.

    Parameters mirror :class:`zsoftmax.train.TrainConfig`; ``random_state``
    maps to its ``seed``. ``attributes`` holds one column per class, seen
    classes first. Training labels must all be seen classes.
    """

    def __init__(self, attributes=None, num_seen=None, hidden_size=128, activation="relu",
                 mode="DU", q=0.3, tau=0.5, learning_rate=0.05, epochs=100, batch_size=64,
                 lambda_l2=0.0, gamma_l1=0.0, standardize=True, random_state=0):
        self.attributes = attributes
        self.num_seen = num_seen
        self.hidden_size = hidden_size
        self.activation = activation
        self.mode = mode
        self.q = q
        self.tau = tau
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.lambda_l2 = lambda_l2
        self.gamma_l1 = gamma_l1
        self.standardize = standardize
        self.random_state = random_state

    def to_train_config(self):
        return TrainConfig(
            hidden_size=self.hidden_size, activation=self.activation, tau=self.tau, q=self.q,
            mode=self.mode, learning_rate=self.learning_rate, epochs=self.epochs,
            batch_size=self.batch_size, lambda_l2=self.lambda_l2, gamma_l1=self.gamma_l1,
            seed=0 if self.random_state is None else int(self.random_state),
            standardize=self.standardize)

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        attrs = as_attribute_matrix(self.attributes, self.num_seen)
        y = y.astype(np.int64)
        if y.min() < 0 or y.max() >= attrs.num_seen:
            raise InvalidParameterError(
                f"training labels must be seen classes in [0, {attrs.num_seen})")
        self.attrs_ = attrs
        self.classes_ = np.arange(attrs.num_classes)
        self.n_features_in_ = X.shape[1]
        self.params_, self.history_ = train(
            self.to_train_config(), attrs, FeatureSet(X, y, attrs.num_classes))
        return self

    def _check(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X

    def decision_function(self, X):
        return scores(self._check(X), self.params_)

    def predict_proba(self, X):
        return predict_proba(self._check(X), self.params_)

    def predict(self, X):
        X = self._check(X)
        return predict_gzsl(self.params_, X)

    def predict_unseen(self, X):
        X = self._check(X)
        return predict_zsl(self.params_, X)

    def score(self, X, y, sample_weight=None):
        """Per-class (macro) accuracy of GZSL predictions."""
        if sample_weight is not None:
            raise NotImplementedError("sample weights are not supported")
        return per_class_accuracy(self.predict(X), np.asarray(y))
