"""Small reference classifiers that produce positive-class scores.

Every model maps a feature row (or matrix) to a score in [0, 1]; the label
is positive iff the score is at least 0.5. Training is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logsumexp

from .data import Dataset
from .graph import nearest, pairwise_sq_dists

CLASSIFIERS = ("NB", "KNN", "DT", "AdaBoostM1")

VAR_FLOOR = 1e-9
THRESHOLD = 0.5


class ClassifierError(ValueError):
    pass


def _training_arrays(train: Dataset) -> tuple[np.ndarray, np.ndarray]:
    try:
        train.require_both_classes()
    except ValueError as exc:
        raise ClassifierError(str(exc)) from None
    return train.features, train.labels


class TrainedModel:
    kind: str = ""
    n_attributes: int = 0

    def _as_matrix(self, x) -> tuple[np.ndarray, bool]:
        X = np.asarray(x, dtype=float)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.n_attributes:
            raise ClassifierError(
                f"{self.kind}: expected {self.n_attributes} attributes, got shape {np.shape(x)}"
            )
        return X, single

    def _scores(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict_score(self, x):
        X, single = self._as_matrix(x)
        s = self._scores(X)
        return float(s[0]) if single else s

    def predict_label(self, x):
        s = self.predict_score(x)
        return s >= THRESHOLD


@dataclass
class NaiveBayes(TrainedModel):
    """Gaussian naive Bayes; row 0 of the parameter arrays is the negative class."""

    log_prior: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    kind: str = "NB"

    @property
    def n_attributes(self):
        return self.mean.shape[1]

    def joint_log_likelihood(self, X: np.ndarray) -> np.ndarray:
        ll = -0.5 * (
            np.log(2 * np.pi * self.var)[None, :, :]
            + (X[:, None, :] - self.mean[None, :, :]) ** 2 / self.var[None, :, :]
        ).sum(axis=2)
        return ll + self.log_prior[None, :]

    def _scores(self, X):
        jll = self.joint_log_likelihood(X)
        return np.exp(jll[:, 1] - logsumexp(jll, axis=1))


def train_nb(train: Dataset) -> NaiveBayes:
    X, y = _training_arrays(train)
    groups = [X[~y], X[y]]
    n = X.shape[0]
    return NaiveBayes(
        log_prior=np.log([g.shape[0] / n for g in groups]),
        mean=np.stack([g.mean(axis=0) for g in groups]),
        var=np.stack([g.var(axis=0) + VAR_FLOOR for g in groups]),
    )


@dataclass
class KNearest(TrainedModel):
    X: np.ndarray
    y: np.ndarray
    k: int = 5
    kind: str = "KNN"

    @property
    def n_attributes(self):
        return self.X.shape[1]

    def neighbours(self, Q: np.ndarray) -> np.ndarray:
        return nearest(pairwise_sq_dists(Q, self.X), self.k)

    def _scores(self, X):
        return self.y[self.neighbours(X)].mean(axis=1)


def train_knn(train: Dataset, k: int = 5) -> KNearest:
    X, y = _training_arrays(train)
    if not 1 <= k <= X.shape[0]:
        raise ClassifierError(f"k={k} invalid for {X.shape[0]} training rows")
    return KNearest(X=X.copy(), y=y.astype(float), k=k)


def _entropy(pos, total):
    p = np.divide(pos, total, out=np.zeros_like(pos, dtype=float), where=total > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(np.where(p > 0, p * np.log2(p), 0.0) + np.where(p < 1, (1 - p) * np.log2(1 - p), 0.0))
    return h


def best_split(X: np.ndarray, y: np.ndarray, min_leaf: int = 1):
    """Highest information-gain threshold split.

    Candidates are midpoints between consecutive distinct values of each
    attribute; both sides must hold at least ``min_leaf`` rows. Returns
    ``(gain, attribute, threshold)`` or ``None`` when nothing qualifies.
    Ties go to the lower attribute index, then the lower threshold.
    """
    n = y.size
    parent = _entropy(np.array([y.sum()], dtype=float), np.array([n], dtype=float))[0]
    best = None
    for a in range(X.shape[1]):
        order = np.argsort(X[:, a], kind="stable")
        xs = X[order, a]
        ys = y[order].astype(float)
        boundary = np.flatnonzero(xs[1:] > xs[:-1])  # split after position i
        if boundary.size == 0:
            continue
        n_left = boundary + 1.0
        n_right = n - n_left
        ok = (n_left >= min_leaf) & (n_right >= min_leaf)
        if not ok.any():
            continue
        cum = np.cumsum(ys)
        pos_left = cum[boundary]
        pos_right = cum[-1] - pos_left
        child = (n_left * _entropy(pos_left, n_left) + n_right * _entropy(pos_right, n_right)) / n
        gain = np.where(ok, parent - child, -np.inf)
        i = int(np.argmax(gain))
        if best is None or gain[i] > best[0]:
            b = boundary[i]
            best = (float(gain[i]), a, (xs[b] + xs[b + 1]) / 2.0)
    return best


@dataclass
class DecisionTree(TrainedModel):
    """Flat array tree; ``attribute[i] == -1`` marks a leaf."""

    attribute: list = field(default_factory=list)
    threshold: list = field(default_factory=list)
    left: list = field(default_factory=list)
    right: list = field(default_factory=list)
    value: list = field(default_factory=list)
    n_attrs: int = 0
    kind: str = "DT"

    @property
    def n_attributes(self):
        return self.n_attrs

    @property
    def depth(self) -> int:
        def walk(i):
            if self.attribute[i] < 0:
                return 0
            return 1 + max(walk(self.left[i]), walk(self.right[i]))
        return walk(0)

    def _add(self, attribute, threshold, value) -> int:
        self.attribute.append(attribute)
        self.threshold.append(threshold)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        return len(self.attribute) - 1

    def _scores(self, X):
        attr = np.asarray(self.attribute)
        thr = np.asarray(self.threshold)
        left = np.asarray(self.left)
        right = np.asarray(self.right)
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            active = attr[node] >= 0
            if not active.any():
                break
            rows = np.flatnonzero(active)
            a = attr[node[rows]]
            go_left = X[rows, a] <= thr[node[rows]]
            node[rows] = np.where(go_left, left[node[rows]], right[node[rows]])
        return np.asarray(self.value)[node]


def train_dt(train: Dataset, max_depth: int = 10, min_leaf: int = 2) -> DecisionTree:
    X, y = _training_arrays(train)
    tree = DecisionTree(n_attrs=X.shape[1])

    def grow(idx, depth):
        ys = y[idx]
        node = tree._add(-1, 0.0, float(ys.mean()))
        if depth >= max_depth or ys.all() or not ys.any() or idx.size < 2 * min_leaf:
            return node
        split = best_split(X[idx], ys, min_leaf)
        if split is None or split[0] <= 0:
            return node
        _, a, t = split
        mask = X[idx, a] <= t
        tree.attribute[node] = a
        tree.threshold[node] = t
        tree.left[node] = grow(idx[mask], depth + 1)
        tree.right[node] = grow(idx[~mask], depth + 1)
        return node

    grow(np.arange(X.shape[0]), 0)
    return tree


@dataclass(frozen=True)
class Stump:
    attribute: int
    threshold: float
    polarity: int  # +1: predict positive above threshold

    def predict(self, X: np.ndarray) -> np.ndarray:
        above = X[:, self.attribute] > self.threshold
        return np.where(above, self.polarity, -self.polarity)


def fit_stump(X: np.ndarray, y_pm: np.ndarray, w: np.ndarray) -> tuple[Stump, float]:
    """Minimum weighted-error stump; ``y_pm`` in {-1, +1}."""
    best_err, best = np.inf, None
    total_pos = w[y_pm > 0].sum()
    total_neg = w[y_pm < 0].sum()
    for a in range(X.shape[1]):
        order = np.argsort(X[:, a], kind="stable")
        xs = X[order, a]
        wp = np.where(y_pm[order] > 0, w[order], 0.0)
        wn = np.where(y_pm[order] < 0, w[order], 0.0)
        cut = np.concatenate([[-1], np.flatnonzero(xs[1:] > xs[:-1])])
        # weight at or below each cut; cut -1 means "everything above"
        cp = np.concatenate([[0.0], np.cumsum(wp)])[cut + 1]
        cn = np.concatenate([[0.0], np.cumsum(wn)])[cut + 1]
        err_up = cp + (total_neg - cn)    # positive above, negative below
        err_down = cn + (total_pos - cp)  # negative above, positive below
        thr = np.concatenate([[xs[0] - 1.0], (xs[cut[1:]] + xs[cut[1:] + 1]) / 2.0])
        for err, pol in ((err_up, 1), (err_down, -1)):
            i = int(np.argmin(err))
            if err[i] < best_err - 1e-15:
                best_err, best = float(err[i]), Stump(a, float(thr[i]), pol)
    return best, max(best_err, 0.0)


@dataclass
class AdaBoostM1(TrainedModel):
    stumps: list
    alphas: list
    n_attrs: int
    prior_score: float = 0.5
    kind: str = "AdaBoostM1"

    @property
    def n_attributes(self):
        return self.n_attrs

    def margin(self, X: np.ndarray) -> np.ndarray:
        F = np.zeros(X.shape[0])
        for stump, alpha in zip(self.stumps, self.alphas):
            F += alpha * stump.predict(X)
        return F

    def _scores(self, X):
        if not self.stumps:
            return np.full(X.shape[0], self.prior_score)
        return expit(2.0 * self.margin(X))


# Stand-in error for a perfect round so its weight stays finite.
_MIN_ERROR = 1e-10


def reweight(w: np.ndarray, wrong: np.ndarray, eps: float) -> np.ndarray:
    """AdaBoost.M1 update: wrong rows scaled by 1/(2 eps), right rows by 1/(2(1-eps))."""
    return np.where(wrong, w / (2.0 * eps), w / (2.0 * (1.0 - eps)))


def train_adaboost(train: Dataset, rounds: int = 50) -> AdaBoostM1:
    X, y = _training_arrays(train)
    y_pm = np.where(y, 1, -1)
    w = np.full(X.shape[0], 1.0 / X.shape[0])
    model = AdaBoostM1(stumps=[], alphas=[], n_attrs=X.shape[1], prior_score=float(y.mean()))
    for _ in range(rounds):
        stump, _ = fit_stump(X, y_pm, w)
        wrong = stump.predict(X) != y_pm
        eps = float(w[wrong].sum())
        if eps >= 0.5:
            break
        alpha = 0.5 * np.log((1.0 - max(eps, _MIN_ERROR)) / max(eps, _MIN_ERROR))
        model.stumps.append(stump)
        model.alphas.append(float(alpha))
        if eps <= 0.0:
            break
        w = reweight(w, wrong, eps)
    return model


def train(kind: str, train_set: Dataset) -> TrainedModel:
    if kind == "NB":
        return train_nb(train_set)
    if kind == "KNN":
        return train_knn(train_set, 5)
    if kind == "DT":
        return train_dt(train_set)
    if kind == "AdaBoostM1":
        return train_adaboost(train_set)
    raise ClassifierError(f"unknown classifier {kind!r}; expected one of {CLASSIFIERS}")


def predict_score(model: TrainedModel, x):
    return model.predict_score(x)


def predict_label(model: TrainedModel, x):
    return model.predict_label(x)
