import numpy as np
import pytest

from zsoftmax.data import AttributeMatrix, FeatureSet, standardize
from zsoftmax.exceptions import InvalidParameterError, TrainingError
from zsoftmax.model import init_params, predict_proba
from zsoftmax.train import (TrainConfig, TrainHistory, _rngs, cross_validate,
                            make_validation_split, train)

FAST = TrainConfig(hidden_size=16, epochs=15, batch_size=16, learning_rate=0.05)


def test_config_validation():
    with pytest.raises(InvalidParameterError):
        TrainConfig(learning_rate=-1)
    with pytest.raises(InvalidParameterError):
        TrainConfig(epochs=0)
    with pytest.raises(InvalidParameterError):
        TrainConfig(q=2.0)
    with pytest.raises(InvalidParameterError):
        TrainConfig(activation="elu")
    assert TrainConfig(mode="nu").mode == "NU"


def test_zero_learning_rate_keeps_init(small_benchmark):
    attrs, tr, _, _ = small_benchmark
    cfg = FAST.replace(learning_rate=0.0, standardize=False)
    params, history = train(cfg, attrs, tr)
    init = init_params(tr.dim_d, cfg.hidden_size, attrs, cfg.activation,
                       rng=_rngs(cfg.seed)[0])
    for name, arr in init.trainables().items():
        assert np.array_equal(params.trainables()[name], arr)
    assert len(history) == cfg.epochs
    np.testing.assert_allclose(history.loss, history.loss[0], rtol=1e-12)


def test_single_sample_loss_decreases():
    attrs = AttributeMatrix(np.array([[1.0, 0.5], [0.0, 1.0]]), 1)
    data = FeatureSet([[0.3, -0.2, 1.0]], [0], 2)
    cfg = TrainConfig(hidden_size=4, epochs=200, batch_size=1, q=0.2, tau=1.0,
                      standardize=False, learning_rate=0.05)
    _, history = train(cfg, attrs, data)
    assert history.loss[-1] < history.loss[0]
    # label entropy lower-bounds the cross-entropy
    floor = -(0.8 * np.log(0.8) + 0.2 * np.log(0.2))
    assert history.loss[-1] == pytest.approx(floor, abs=1e-3)


def test_deterministic(small_benchmark):
    attrs, tr, ts, tu = small_benchmark
    a, ha = train(FAST, attrs, tr, (ts, tu))
    b, hb = train(FAST, attrs, tr, (ts, tu))
    for name in ("W1", "b1", "W2", "b2"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()
    assert ha == hb
    assert all(v is not None for v in ha.val_ah)


def test_shuffle_stream_independent_of_architecture():
    a = _rngs(5)[1].permutation(100)
    b = _rngs(5)[1].permutation(100)
    assert np.array_equal(a, b)


def test_standardization_is_folded(small_benchmark):
    attrs, tr, ts, _ = small_benchmark
    folded, _ = train(FAST, attrs, tr)
    (tr_std, ts_std), _, _ = standardize(tr, [ts])
    plain, _ = train(FAST.replace(standardize=False), attrs, tr_std)
    np.testing.assert_allclose(predict_proba(ts.features, folded),
                               predict_proba(ts_std.features, plain), rtol=1e-8, atol=1e-12)


def test_loss_trend_default_config(small_benchmark):
    attrs, tr, _, _ = small_benchmark
    _, history = train(TrainConfig(epochs=30), attrs, tr)
    assert history.loss[-1] < history.loss[0]


def test_rejects_unseen_labels(small_benchmark):
    attrs, tr, _, tu = small_benchmark
    with pytest.raises(InvalidParameterError, match="unseen"):
        train(FAST, attrs, tu)
    with pytest.raises(InvalidParameterError):
        train(FAST, attrs, FeatureSet(np.zeros((0, tr.dim_d)), [], tr.num_classes))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_loss_aborts():
    attrs = AttributeMatrix(np.array([[1.0, -1.0]]), 1)
    data = FeatureSet(np.full((4, 2), 1e3), [0] * 4, 2)
    cfg = TrainConfig(hidden_size=3, epochs=50, learning_rate=1e200, standardize=False,
                      activation="tanh", q=0.5, lambda_l2=1.0)
    with pytest.raises(TrainingError, match="epoch"):
        train(cfg, attrs, data)


def test_history_csv(tmp_path):
    h = TrainHistory(loss=[1.5, 1.25], val_ah=[None, 0.5])
    h.to_csv(tmp_path / "h.csv")
    assert (tmp_path / "h.csv").read_text() == "epoch,loss,val_ah\n1,1.5,\n2,1.25,0.5\n"


def test_validation_split(small_benchmark):
    attrs, tr, _, _ = small_benchmark
    va, sub, vs, vu = make_validation_split(attrs, tr, num_val_unseen=2, seed=1)
    assert (va.num_seen, va.num_unseen) == (4, 2)
    assert sub.labels.max() < 4 and vs.labels.max() < 4 and vu.labels.min() >= 4
    assert len(sub) + len(vs) + len(vu) == len(tr)
    assert len(vs) == 4 * 4  # 20% of 20 per kept class
    # every relabelled sample keeps its attribute vector
    for fs in (sub, vs, vu):
        for x, k in zip(fs.features[:5], fs.labels[:5]):
            orig = tr.labels[np.flatnonzero((tr.features == x).all(axis=1))[0]]
            assert np.array_equal(va.matrix[:, k], attrs.matrix[:, orig])


def test_cross_validate_tie_breaks_and_errors(small_benchmark):
    attrs, tr, ts, tu = small_benchmark
    with pytest.raises(InvalidParameterError):
        cross_validate([], attrs, tr, (ts, tu))
    best, results = cross_validate([FAST], attrs, tr, (ts, tu))
    assert best is FAST and len(results) == 1
    dup = FAST.replace()
    best, results = cross_validate([FAST, dup], attrs, tr, (ts, tu))
    assert best is FAST
    assert results[0][1] == results[1][1]


def test_cross_validate_prefers_soft_labels(small_benchmark):
    attrs, tr, ts, tu = small_benchmark
    hard, soft = FAST.replace(q=0.0, epochs=30), FAST.replace(q=0.3, epochs=30)
    best, results = cross_validate([hard, soft], attrs, tr, (ts, tu))
    assert best == soft
    assert results[1][1].a_harmonic > results[0][1].a_harmonic
