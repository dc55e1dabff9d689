"""Datasets, file formats, preprocessing and the synthetic benchmark.

Class indexing is global: seen classes occupy ``0..num_seen-1`` and unseen
classes ``num_seen..num_classes-1``.
"""
import csv
import struct
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import FormatError, InvalidParameterError, ParseError

FEATURE_MAGIC = b"ZSFB"
FEATURE_VERSION = 1
_FEATURE_HEADER = struct.Struct("<4sIIII")


@dataclass(frozen=True)
class AttributeMatrix:
    """Class attribute vectors stored as columns of ``matrix`` (a x C)."""

    matrix: np.ndarray
    num_seen: int
    class_names: tuple = None
    # file_order[i] is the file row that became column i
    file_order: tuple = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64)
        if m.ndim != 2:
            raise InvalidParameterError("attribute matrix must be 2-d (a x C)")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        c = m.shape[1]
        if not 1 <= self.num_seen < c:
            raise InvalidParameterError(
                f"need at least one seen and one unseen class, got num_seen={self.num_seen} of {c}")
        if not np.all(np.isfinite(m)):
            raise InvalidParameterError("attribute matrix has non-finite entries")
        names = self.class_names
        if names is None:
            names = tuple(f"class{k}" for k in range(c))
        names = tuple(str(n) for n in names)
        if len(names) != c:
            raise InvalidParameterError(f"{len(names)} class names for {c} classes")
        if len(set(names)) != c:
            raise InvalidParameterError("class names must be unique")
        object.__setattr__(self, "class_names", names)
        order = self.file_order
        object.__setattr__(self, "file_order", tuple(range(c)) if order is None else tuple(order))

    @property
    def dim_a(self):
        return self.matrix.shape[0]

    @property
    def num_classes(self):
        return self.matrix.shape[1]

    @property
    def num_unseen(self):
        return self.num_classes - self.num_seen

    @property
    def seen(self):
        return self.matrix[:, :self.num_seen]

    @property
    def unseen(self):
        return self.matrix[:, self.num_seen:]


@dataclass(frozen=True)
class FeatureSet:
    features: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        x = np.array(self.features, dtype=np.float64)
        y = np.array(self.labels, dtype=np.int64).reshape(-1)
        if x.ndim != 2:
            raise InvalidParameterError("features must be 2-d (n x d)")
        if x.shape[0] != y.shape[0]:
            raise InvalidParameterError(f"{x.shape[0]} feature rows but {y.shape[0]} labels")
        if y.size and (y.min() < 0 or y.max() >= self.num_classes):
            raise InvalidParameterError(f"labels must lie in [0, {self.num_classes})")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    def __len__(self):
        return self.features.shape[0]

    @property
    def dim_d(self):
        return self.features.shape[1]

    def with_features(self, features):
        return FeatureSet(features, self.labels, self.num_classes)


def check_seen_only(feature_set, num_seen):
    """Raise if a training set carries any unseen-class label."""
    if len(feature_set) and feature_set.labels.max() >= num_seen:
        raise InvalidParameterError(
            f"training set contains unseen label {int(feature_set.labels.max())} "
            f"(num_seen={num_seen})")


# -- attribute CSV ---------------------------------------------------------

def load_attributes(path):
    seen, unseen = [], []
    names = set()
    dim = None
    with open(path, newline="", encoding="utf-8") as fh:
        rows = csv.reader(fh)
        header = next(rows, None)
        if header is None:
            raise ParseError("empty attribute file", line=1)
        if len(header) < 3 or header[0].strip() != "class" or header[1].strip() != "role":
            raise ParseError("header must be 'class,role,a0,a1,...'", line=1)
        dim = len(header) - 2
        for row_idx, row in enumerate(rows):
            lineno = row_idx + 2
            if not row:
                continue
            if len(row) != dim + 2:
                raise ParseError(f"expected {dim + 2} fields, got {len(row)}", line=lineno)
            name, role = row[0].strip(), row[1].strip()
            if name in names:
                raise ParseError(f"duplicate class name {name!r}", line=lineno)
            names.add(name)
            try:
                values = [float(v) for v in row[2:]]
            except ValueError:
                raise ParseError("non-numeric attribute value", line=lineno) from None
            if not all(np.isfinite(values)):
                raise ParseError("non-finite attribute value", line=lineno)
            entry = (row_idx, name, values)
            if role == "seen":
                seen.append(entry)
            elif role == "unseen":
                unseen.append(entry)
            else:
                raise ParseError(f"unknown role {role!r} (expected seen or unseen)", line=lineno)
    if not seen or not unseen:
        raise ParseError("need at least one seen and one unseen class")
    ordered = seen + unseen
    return AttributeMatrix(
        matrix=np.array([e[2] for e in ordered]).T,
        num_seen=len(seen),
        class_names=tuple(e[1] for e in ordered),
        file_order=tuple(e[0] for e in ordered),
    )


def save_attributes(attrs, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(["class", "role"] + [f"a{i}" for i in range(attrs.dim_a)]) + "\n")
        for k, name in enumerate(attrs.class_names):
            role = "seen" if k < attrs.num_seen else "unseen"
            cells = [repr(float(v)) for v in attrs.matrix[:, k]]
            fh.write(",".join([name, role] + cells) + "\n")


# -- feature binary --------------------------------------------------------

def features_to_bytes(feature_set):
    n, d = feature_set.features.shape
    header = _FEATURE_HEADER.pack(FEATURE_MAGIC, FEATURE_VERSION, n, d, feature_set.num_classes)
    return (header
            + feature_set.features.astype("<f4").tobytes()
            + feature_set.labels.astype("<u4").tobytes())


def features_from_bytes(buf):
    if len(buf) < _FEATURE_HEADER.size:
        raise FormatError("truncated header")
    magic, version, n, d, num_classes = _FEATURE_HEADER.unpack_from(buf)
    if magic != FEATURE_MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != FEATURE_VERSION:
        raise FormatError(f"unsupported version {version}")
    expected = _FEATURE_HEADER.size + 4 * n * d + 4 * n
    if len(buf) < expected:
        raise FormatError(f"truncated payload: expected {expected} bytes, got {len(buf)}")
    if len(buf) > expected:
        raise FormatError(f"{len(buf) - expected} trailing bytes after payload")
    off = _FEATURE_HEADER.size
    x = np.frombuffer(buf, dtype="<f4", count=n * d, offset=off).reshape(n, d)
    y = np.frombuffer(buf, dtype="<u4", count=n, offset=off + 4 * n * d)
    if n and int(y.max()) >= num_classes:
        raise FormatError(f"label {int(y.max())} >= declared class count {num_classes}")
    return FeatureSet(x.astype(np.float64), y.astype(np.int64), num_classes)


def load_features(path):
    with open(path, "rb") as fh:
        return features_from_bytes(fh.read())


def save_features(feature_set, path):
    with open(path, "wb") as fh:
        fh.write(features_to_bytes(feature_set))


# -- preprocessing ---------------------------------------------------------

class Standardizer(TransformerMixin, BaseEstimator):
    """Per-dimension z-scoring; near-constant dimensions are only centered."""

    def __init__(self, min_std=1e-12):
        self.min_std = min_std

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale_ = np.where(std < self.min_std, 1.0, std)
        return self

    def transform(self, X):
        check_is_fitted(self, "scale_")
        X = check_array(X, dtype=np.float64)
        return (X - self.mean_) / self.scale_


def standardize(train, others=()):
    """Fit z-scoring on ``train`` and apply it to ``train`` and every set in ``others``.

    Returns ``(transformed_sets, mean, scale)`` with the training set first.
    """
    if len(train) == 0:
        raise InvalidParameterError("cannot standardize an empty training set")
    scaler = Standardizer().fit(train.features)
    out = [s.with_features(scaler.transform(s.features)) if len(s) else s
           for s in (train, *others)]
    return out, scaler.mean_, scaler.scale_


def l2_normalize(feature_set):
    x = feature_set.features
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return feature_set.with_features(x / np.where(norms == 0, 1.0, norms))


# -- synthetic benchmark ---------------------------------------------------

@dataclass(frozen=True)
class SynthSpec:
    dim_a: int = 16
    dim_d: int = 32
    num_seen: int = 12
    num_unseen: int = 4
    train_per_class: int = 60
    test_per_class: int = 20
    noise_sigma: float = 0.3
    seed: int = 0

    def __post_init__(self):
        for name in ("dim_a", "dim_d", "num_seen", "num_unseen",
                     "train_per_class", "test_per_class"):
            if int(getattr(self, name)) < 1:
                raise InvalidParameterError(f"{name} must be >= 1")
        if not self.noise_sigma >= 0:
            raise InvalidParameterError("noise_sigma must be >= 0")


def _synth_streams(spec):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(spec.seed).spawn(3)]


def synth_projection(spec):
    """The ground-truth attribute-to-feature map (d x a) used by ``synth_generate``."""
    rng = _synth_streams(spec)[0]
    return rng.standard_normal((spec.dim_d, spec.dim_a)) / np.sqrt(spec.dim_a)


def _draw_signatures(spec, rng, max_retries=100):
    c = spec.num_seen + spec.num_unseen
    cols = []
    for k in range(c):
        for _ in range(max_retries + 1):
            v = rng.integers(0, 2, size=spec.dim_a).astype(np.float64)
            if not any(np.array_equal(v, u) for u in cols):
                cols.append(v)
                break
        else:
            raise InvalidParameterError(
                f"could not draw a distinct attribute vector for class {k} "
                f"after {max_retries} retries (dim_a={spec.dim_a} too small?)")
    return np.stack(cols, axis=1)


def synth_generate(spec):
    """Draw ``(attributes, train, test_seen, test_unseen)``; deterministic in ``spec.seed``.

    Class k's samples are ``M @ a_k + noise`` with binary attribute vectors
    ``a_k`` and a fixed Gaussian map ``M`` (see ``synth_projection``).
    """
    _, attr_rng, noise_rng = _synth_streams(spec)
    proj = synth_projection(spec)
    a = _draw_signatures(spec, attr_rng)
    c = a.shape[1]
    attrs = AttributeMatrix(a, spec.num_seen)
    prototypes = (proj @ a).T  # C x d

    def draw(classes, per_class):
        labels = np.repeat(np.asarray(classes, dtype=np.int64), per_class)
        noise = noise_rng.standard_normal((labels.size, spec.dim_d)) * spec.noise_sigma
        return FeatureSet(prototypes[labels] + noise, labels, c)

    seen = range(spec.num_seen)
    train = draw(seen, spec.train_per_class)
    test_seen = draw(seen, spec.test_per_class)
    test_unseen = draw(range(spec.num_seen, c), spec.test_per_class)
    return attrs, train, test_seen, test_unseen
