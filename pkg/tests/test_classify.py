import math

import numpy as np
import pytest
from scipy.stats import norm

from ugrwo.classify import (
    ClassifierError,
    best_split,
    fit_stump,
    predict_label,
    predict_score,
    reweight,
    train,
    train_adaboost,
    train_dt,
    train_knn,
    train_nb,
)
from ugrwo.data import Dataset

from conftest import make_dataset
from oracles import brute_knn, entropy


def blobs(seed=0, n=100, sep=6.0, m=2):
    rng = np.random.default_rng(seed)
    return make_dataset(rng.normal(sep, 1, (n, m)), rng.normal(0, 1, (n, m)))


@pytest.mark.parametrize("kind", ["NB", "KNN", "DT", "AdaBoostM1"])
def test_separated_blobs_training_accuracy(kind):
    ds = blobs()
    model = train(kind, ds)
    scores = model.predict_score(ds.features)
    assert np.all((scores >= 0) & (scores <= 1))
    assert np.array_equal(model.predict_label(ds.features), scores >= 0.5)
    assert (model.predict_label(ds.features) == ds.labels).mean() >= 0.95


@pytest.mark.parametrize("kind", ["NB", "KNN", "DT", "AdaBoostM1"])
def test_one_class_training_rejected(kind):
    ds = Dataset(np.arange(6.0)[:, None], [True] * 6, ())
    with pytest.raises(ClassifierError):
        train(kind, ds)


@pytest.mark.parametrize("kind", ["NB", "KNN", "DT", "AdaBoostM1"])
def test_attribute_mismatch(kind):
    model = train(kind, blobs(n=10))
    with pytest.raises(ClassifierError):
        model.predict_score([1.0, 2.0, 3.0])


@pytest.mark.parametrize("kind", ["NB", "KNN", "DT", "AdaBoostM1"])
def test_training_is_deterministic(kind):
    ds = blobs(3, sep=1.5)
    a = train(kind, ds).predict_score(ds.features)
    b = train(kind, ds).predict_score(ds.features)
    assert np.array_equal(a, b)


def test_nb_closed_form_posterior():
    rng = np.random.default_rng(1)
    ds = make_dataset(rng.normal(10, 1, (50, 1)), rng.normal(-10, 1, (80, 1)))
    model = train_nb(ds)
    pos, neg = ds.minority[:, 0], ds.majority[:, 0]
    x = 10.0
    lp = 50 / 130 * norm.pdf(x, pos.mean(), math.sqrt(pos.var() + 1e-9))
    ln = 80 / 130 * norm.pdf(x, neg.mean(), math.sqrt(neg.var() + 1e-9))
    assert model.predict_score([x]) == pytest.approx(lp / (lp + ln), rel=1e-9)
    assert model.predict_score([x]) > 0.99


def test_nb_symmetric_point_scores_half():
    ds = make_dataset([[1.0], [3.0]], [[-1.0], [-3.0]])
    assert train_nb(ds).predict_score([0.0]) == pytest.approx(0.5, abs=1e-12)


def test_nb_constant_attribute():
    ds = make_dataset([[1.0, 4.0], [2.0, 4.0]], [[-1.0, 4.0], [-2.0, 4.0]])
    model = train_nb(ds)
    with_const = model.predict_score([0.5, 4.0])
    # the constant column has identical parameters in both classes
    assert model.var[:, 1].tolist() == [1e-9, 1e-9]
    only_first = train_nb(make_dataset([[1.0], [2.0]], [[-1.0], [-2.0]])).predict_score([0.5])
    assert with_const == pytest.approx(only_first, rel=1e-12)


def test_knn_self_and_votes():
    ds = make_dataset([[0.0], [1.0], [2.0]], [[10.0], [11.0], [12.0]])
    m1 = train_knn(ds, 1)
    assert m1.predict_score([0.0]) == 1.0 and m1.predict_score([11.0]) == 0.0
    X = np.array([[0.0], [0.1], [0.2], [0.3], [0.4], [5.0]])
    ds2 = Dataset(X, [True, True, True, False, False, False], ())
    assert train_knn(ds2, 5).predict_score([0.0]) == pytest.approx(0.6)


def test_knn_matches_bruteforce_oracle():
    rng = np.random.default_rng(5)
    train_X = rng.normal(size=(120, 3))
    labels = rng.random(120) < 0.3
    ds = Dataset(train_X, labels, ())
    model = train_knn(ds, 5)
    queries = rng.normal(size=(500, 3))
    scores = model.predict_score(queries)
    stacked = np.vstack([train_X, queries])
    for q in range(500):
        # oracle: brute-force neighbours of the query among training rows only
        d = [(sum((a - b) ** 2 for a, b in zip(queries[q], t)), j) for j, t in enumerate(train_X)]
        nn = [j for _, j in sorted(d)[:5]]
        assert scores[q] == sum(labels[nn]) / 5
    assert stacked.shape[0] == 620


def test_knn_k_too_large():
    with pytest.raises(ClassifierError):
        train_knn(make_dataset([[0.0]], [[1.0]]), 5)


def test_dt_single_threshold():
    X = np.array([[-3.0], [-2.0], [-1.0], [1.0], [2.0], [3.0]])
    ds = Dataset(X, [False, False, False, True, True, True], ())
    tree = train_dt(ds)
    assert tree.depth == 1
    assert tree.threshold[0] == 0.0
    assert np.array_equal(tree.predict_label(X), ds.labels)


def test_dt_pure_leaves_give_hard_scores():
    ds = blobs(2)
    scores = train_dt(ds, max_depth=30, min_leaf=1).predict_score(ds.features)
    assert set(np.unique(scores).tolist()) <= {0.0, 1.0}


def _hand_gain(xs, ys):
    parent = entropy(sum(ys), len(ys))
    out = {}
    values = sorted(set(xs))
    for lo, hi in zip(values, values[1:]):
        t = (lo + hi) / 2
        left = [y for x, y in zip(xs, ys) if x <= t]
        right = [y for x, y in zip(xs, ys) if x > t]
        child = (len(left) * entropy(sum(left), len(left)) + len(right) * entropy(sum(right), len(right))) / len(ys)
        out[t] = parent - child
    return out


def test_dt_split_matches_hand_enumeration():
    xs = [1, 2, 3, 4, 5, 6]
    ys = [0, 0, 0, 1, 0, 1]
    gains = _hand_gain(xs, ys)
    t_best = max(gains, key=gains.get)
    assert t_best == 3.5
    gain, attr, thr = best_split(np.array(xs, float)[:, None], np.array(ys, bool))
    assert (attr, thr) == (0, t_best)
    assert gain == pytest.approx(gains[t_best], abs=1e-12)
    # a noisier second attribute must not be chosen
    X2 = np.column_stack([np.array([1, 4, 2, 5, 6, 3], float), xs])
    gains2 = _hand_gain(X2[:, 0].tolist(), ys)
    assert max(gains2.values()) < gains[t_best]
    assert best_split(X2, np.array(ys, bool))[1:] == (1, 3.5)


def test_dt_tie_goes_to_lower_threshold():
    xs = [1, 2, 3, 4, 5, 6]
    ys = [0, 0, 1, 0, 1, 1]
    gains = _hand_gain(xs, ys)
    assert gains[2.5] == pytest.approx(gains[4.5])
    assert best_split(np.array(xs, float)[:, None], np.array(ys, bool), 1)[2] == 2.5


def test_adaboost_separable_stops_after_one_round():
    X = np.array([[-2.0], [-1.0], [1.0], [2.0]])
    ds = Dataset(X, [False, False, True, True], ())
    model = train_adaboost(ds)
    assert len(model.stumps) == 1
    assert np.array_equal(model.predict_label(X), ds.labels)


def test_adaboost_weight_update_by_hand():
    X = np.array([[1.0], [2.0], [3.0], [4.0]])
    y = np.array([-1, -1, 1, -1])
    w = np.full(4, 0.25)
    stump, eps = fit_stump(X, y, w)
    assert (stump.threshold, stump.polarity) == (2.5, 1)
    assert eps == pytest.approx(0.25)
    wrong = stump.predict(X) != y
    assert wrong.tolist() == [False, False, False, True]
    new = reweight(w, wrong, eps)
    # wrong: 0.25 / (2 * 0.25); right: 0.25 / (2 * 0.75)
    assert new.tolist() == pytest.approx([1 / 6, 1 / 6, 1 / 6, 1 / 2])
    assert new.sum() == pytest.approx(1.0)


def test_adaboost_alpha_and_score_monotone():
    rng = np.random.default_rng(4)
    ds = make_dataset(rng.normal(1, 1, (40, 2)), rng.normal(0, 1, (60, 2)))
    model = train_adaboost(ds, rounds=10)
    assert 1 < len(model.stumps) <= 10
    Q = rng.normal(0.5, 1.5, (200, 2))
    margin = model.margin(Q)
    scores = model.predict_score(Q)
    order = np.argsort(margin)
    assert np.all(np.diff(scores[order]) >= 0)


def test_threshold_rule_and_module_functions():
    ds = make_dataset([[1.0], [3.0]], [[-1.0], [-3.0]])
    model = train_knn(ds, 2)
    assert predict_score(model, [0.0]) == 0.5
    assert predict_label(model, [0.0])  # ties resolve to positive
    nb = train_nb(ds)
    assert predict_label(nb, [0.5]) and not predict_label(nb, [-0.5])
    assert predict_score(nb, [0.5]) > 0.5
