"""Confusion-matrix metrics, rank AUC, AUC ratios and win counting."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field, fields
from typing import Hashable, Iterable, Mapping

import numpy as np
from scipy.stats import rankdata

# Table column order for reports and win summaries.
REPORT_COLUMNS = ("f_min", "f_maj", "acc", "g_mean", "tp_rate", "auc")
COLUMN_TITLES = {
    "f_min": "F-min",
    "f_maj": "F-maj",
    "acc": "acc",
    "g_mean": "G-mean",
    "tp_rate": "TPrate",
    "auc": "AUC",
}
_ATTRIBUTE = {"acc": "accuracy"}


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fn: int
    fp: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn


@dataclass
class MetricsReport:
    f_min: float
    f_maj: float
    accuracy: float
    g_mean: float
    tp_rate: float
    auc: float
    precision_min: float
    precision_maj: float
    tn_rate: float
    undefined: frozenset = field(default_factory=frozenset)

    def row(self) -> dict[str, float]:
        """Values keyed by report column (``acc`` is :attr:`accuracy`)."""
        return {name: getattr(self, _ATTRIBUTE.get(name, name)) for name in REPORT_COLUMNS}

    def values(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "undefined"}


def confusion(labels, predictions) -> ConfusionCounts:
    """Counts with the positive (minority) class as the target."""
    t = np.asarray(labels, dtype=bool)
    p = np.asarray(predictions, dtype=bool)
    if t.shape != p.shape or t.ndim != 1:
        raise MetricError(f"length mismatch: {t.shape} vs {p.shape}")
    if t.size == 0:
        raise MetricError("no instances to evaluate")
    return ConfusionCounts(
        tp=int((t & p).sum()),
        fn=int((t & ~p).sum()),
        fp=int((~t & p).sum()),
        tn=int((~t & ~p).sum()),
    )


def f_measure(precision: float, recall: float, beta: float = 1.0) -> float:
    b2 = beta * beta
    denom = b2 * precision + recall
    return 0.0 if denom == 0 else (1 + b2) * precision * recall / denom


def derive_metrics(c: ConfusionCounts, beta: float = 1.0, auc_value: float = 0.0) -> MetricsReport:
    """Per-class precision/recall, F, G-mean and accuracy.

    A 0/0 ratio reports 0 and its name is added to ``undefined``.
    """
    if c.total == 0:
        raise MetricError("all confusion counts are zero")
    undefined = set()

    def ratio(num, den, name):
        if den == 0:
            undefined.add(name)
            return 0.0
        return num / den

    precision_min = ratio(c.tp, c.tp + c.fp, "precision_min")
    tp_rate = ratio(c.tp, c.tp + c.fn, "tp_rate")
    precision_maj = ratio(c.tn, c.tn + c.fn, "precision_maj")
    tn_rate = ratio(c.tn, c.tn + c.fp, "tn_rate")
    f_min = f_measure(precision_min, tp_rate, beta)
    f_maj = f_measure(precision_maj, tn_rate, beta)
    if precision_min + tp_rate == 0:
        undefined.add("f_min")
    if precision_maj + tn_rate == 0:
        undefined.add("f_maj")
    return MetricsReport(
        f_min=f_min,
        f_maj=f_maj,
        accuracy=(c.tp + c.tn) / c.total,
        g_mean=math.sqrt(tp_rate * tn_rate),
        tp_rate=tp_rate,
        auc=auc_value,
        precision_min=precision_min,
        precision_maj=precision_maj,
        tn_rate=tn_rate,
        undefined=frozenset(undefined),
    )


def auc(scores, labels) -> float:
    """Mann-Whitney AUC: share of (positive, negative) pairs ranked correctly, ties 1/2."""
    s = np.asarray(scores, dtype=float)
    t = np.asarray(labels, dtype=bool)
    if s.shape != t.shape or s.ndim != 1:
        raise MetricError(f"length mismatch: {s.shape} vs {t.shape}")
    n_pos = int(t.sum())
    n_neg = t.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("AUC needs at least one positive and one negative")
    ranks = rankdata(s)  # average ranks, so every value is a multiple of 1/2
    u = ranks[t].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def auc_ratio(aucs: Mapping[Hashable, float]) -> dict:
    if not aucs:
        raise MetricError("no AUC values given")
    best = max(aucs.values())
    if best <= 0:
        raise MetricError("every AUC is zero, ratio undefined")
    return {method: value / best for method, value in aucs.items()}


def win_summary(results: Iterable[tuple]) -> dict[tuple[str, str, str], int]:
    """Count best-value wins per (classifier, method, metric).

    ``results`` holds ``(classifier, method, case, metric, value)`` tuples,
    where ``case`` identifies one comparison (a dataset, or a dataset and
    rate). Every method must cover every (classifier, case, metric) seen.
    Exact ties credit every tied method.
    """
    cells: dict[tuple, dict[str, float]] = defaultdict(dict)
    methods_by_clf: dict[str, set] = defaultdict(set)
    metrics_seen: set = set()
    for classifier, method, case, metric, value in results:
        cell = cells[(classifier, case, metric)]
        if method in cell:
            raise MetricError(f"duplicate result for {(classifier, method, case, metric)}")
        cell[method] = float(value)
        methods_by_clf[classifier].add(method)
        metrics_seen.add(metric)

    wins: dict[tuple[str, str, str], int] = {}
    for classifier, methods in methods_by_clf.items():
        for method in methods:
            for metric in metrics_seen:
                wins[(classifier, method, metric)] = 0
    cases_by_clf = defaultdict(set)
    for classifier, case, _ in cells:
        cases_by_clf[classifier].add(case)
    for classifier, cases in cases_by_clf.items():
        for case in cases:
            for metric in metrics_seen:
                cell = cells.get((classifier, case, metric), {})
                missing = methods_by_clf[classifier] - cell.keys()
                if missing:
                    raise MetricError(
                        f"incomplete grid: {sorted(missing)} missing for "
                        f"{classifier}/{case}/{metric}"
                    )
                top = max(cell.values())
                for method, value in cell.items():
                    if value == top:
                        wins[(classifier, method, metric)] += 1
    return wins
