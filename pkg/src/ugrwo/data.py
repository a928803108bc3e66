"""Dataset container, CSV ingestion, imputation and stratified folds."""

from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

CONTINUOUS = "continuous"
DISCRETE = "discrete"

# UCI convention: "?" and blank cells are missing.
MISSING_TOKENS = frozenset({"", "?"})


class DataError(ValueError):
    """Raised for malformed or unusable input data."""


@dataclass(frozen=True)
class Dataset:
    """Binary-labelled feature matrix.

    ``features`` is float; discrete columns hold integer category codes whose
    original tokens live in ``categories``. Missing cells are NaN until
    :func:`impute_mean` runs. ``labels`` is boolean, ``True`` = positive
    (minority) class.
    """

    features: np.ndarray
    labels: np.ndarray
    kinds: tuple[str, ...]
    name: str = "dataset"
    positive_label: str = "positive"
    columns: tuple[str, ...] = ()
    categories: dict[int, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels, dtype=bool)
        if X.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {X.shape}")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise DataError(f"dataset needs n >= 1 and m >= 1, got {X.shape}")
        if y.shape != (X.shape[0],):
            raise DataError(
                f"labels length {y.shape} does not match {X.shape[0]} feature rows"
            )
        kinds = tuple(self.kinds) if self.kinds else (CONTINUOUS,) * X.shape[1]
        if len(kinds) != X.shape[1]:
            raise DataError("one attribute kind per column required")
        bad = set(kinds) - {CONTINUOUS, DISCRETE}
        if bad:
            raise DataError(f"unknown attribute kinds: {sorted(bad)}")
        columns = tuple(self.columns) or tuple(f"a{i}" for i in range(X.shape[1]))
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "kinds", kinds)
        object.__setattr__(self, "columns", columns)

    @property
    def n_instances(self) -> int:
        return self.features.shape[0]

    @property
    def n_attributes(self) -> int:
        return self.features.shape[1]

    @property
    def n_positive(self) -> int:
        return int(self.labels.sum())

    @property
    def minority(self) -> np.ndarray:
        return self.features[self.labels]

    @property
    def majority(self) -> np.ndarray:
        return self.features[~self.labels]

    @property
    def discrete_mask(self) -> np.ndarray:
        return np.array([k == DISCRETE for k in self.kinds], dtype=bool)

    def has_missing(self) -> bool:
        return bool(np.isnan(self.features).any())

    def subset(self, index) -> "Dataset":
        return replace(self, features=self.features[index], labels=self.labels[index])

    def require_both_classes(self) -> None:
        n_pos = self.n_positive
        if n_pos == 0 or n_pos == self.n_instances:
            raise DataError(
                f"{self.name}: both classes must be non-empty "
                f"(positives={n_pos}, total={self.n_instances})"
            )


@dataclass(frozen=True)
class DatasetSummary:
    name: str
    n_instances: int
    n_positive: int
    n_attributes: int
    positive_label: str
    imbalance_ratio: float

    HEADER = ("name", "instances", "positives", "attributes", "positive_label", "IR")

    def as_row(self) -> list[str]:
        return [
            self.name,
            str(self.n_instances),
            str(self.n_positive),
            str(self.n_attributes),
            self.positive_label,
            f"{self.imbalance_ratio:.2f}",
        ]


def _parse_float(token: str, row: int, column: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise DataError(
            f"row {row}: non-numeric value {token!r} in continuous column {column!r}"
        ) from None


def load_csv(
    path: str | os.PathLike,
    label_column: str,
    positive_label: str,
    discrete_columns: Iterable[str] = (),
    name: str | None = None,
) -> Dataset:
    """Read a headed, comma-separated file into a :class:`Dataset`.

    Rows matching ``positive_label`` become the positive class and every other
    label becomes negative. Missing cells are kept as NaN; call
    :func:`impute_mean` (or use :func:`read_dataset`) to fill them.
    """
    path = os.fspath(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise DataError(f"cannot decode {path}: {exc}") from exc

    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise DataError(f"{path}: empty file, header row expected")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if label_column not in header:
        raise DataError(f"{path}: unknown label column {label_column!r}")
    if not body:
        raise DataError(f"{path}: no data rows")

    discrete = set(discrete_columns)
    unknown = discrete - set(header)
    if unknown:
        raise DataError(f"{path}: unknown discrete columns {sorted(unknown)}")

    label_idx = header.index(label_column)
    attr_idx = [i for i in range(len(header)) if i != label_idx]
    attr_names = tuple(header[i] for i in attr_idx)
    if not attr_idx:
        raise DataError(f"{path}: no attribute columns besides the label")

    X = np.empty((len(body), len(attr_idx)), dtype=float)
    y = np.empty(len(body), dtype=bool)
    codes: dict[int, dict[str, int]] = {
        j: {} for j, c in enumerate(attr_names) if c in discrete
    }
    for r, raw in enumerate(body, start=2):
        if len(raw) != len(header):
            raise DataError(
                f"{path}: row {r} has {len(raw)} cells, header has {len(header)}"
            )
        label = raw[label_idx].strip()
        if label in MISSING_TOKENS:
            raise DataError(f"{path}: row {r} has no class label")
        y[r - 2] = label == positive_label
        for j, i in enumerate(attr_idx):
            token = raw[i].strip()
            if token in MISSING_TOKENS:
                X[r - 2, j] = np.nan
            elif j in codes:
                X[r - 2, j] = codes[j].setdefault(token, len(codes[j]))
            else:
                X[r - 2, j] = _parse_float(token, r, attr_names[j])

    kinds = tuple(DISCRETE if j in codes else CONTINUOUS for j in range(len(attr_names)))
    categories = {j: tuple(m) for j, m in codes.items()}
    if name is None:
        name = os.path.splitext(os.path.basename(path))[0]
    return Dataset(
        features=X,
        labels=y,
        kinds=kinds,
        name=name,
        positive_label=positive_label,
        columns=attr_names,
        categories=categories,
    )


def impute_mean(ds: Dataset) -> Dataset:
    """Fill missing cells: column mean for continuous, column mode for discrete."""
    X = np.array(ds.features, dtype=float)
    missing = np.isnan(X)
    if not missing.any():
        return ds
    for j in range(X.shape[1]):
        col_missing = missing[:, j]
        if not col_missing.any():
            continue
        present = X[~col_missing, j]
        if present.size == 0:
            raise DataError(f"{ds.name}: column {ds.columns[j]!r} is entirely missing")
        if ds.kinds[j] == DISCRETE:
            values, counts = np.unique(present, return_counts=True)
            # np.unique sorts, so argmax picks the smallest code on ties.
            fill = values[np.argmax(counts)]
        else:
            fill = present.mean()
        X[col_missing, j] = fill
    return replace(ds, features=X)


def read_dataset(
    path: str | os.PathLike,
    label_column: str,
    positive_label: str,
    discrete_columns: Iterable[str] = (),
    name: str | None = None,
) -> Dataset:
    """Load and impute in one step."""
    return impute_mean(
        load_csv(path, label_column, positive_label, discrete_columns, name=name)
    )


def imbalance_ratio(n_instances: int, n_positive: int) -> float:
    """Majority/minority count ratio truncated (not rounded) to two decimals."""
    if n_positive <= 0:
        raise DataError("no positive instances, imbalance ratio undefined")
    exact = Fraction(n_instances - n_positive, n_positive)
    return math.floor(exact * 100) / 100


def summarize(ds: Dataset) -> DatasetSummary:
    n_pos = ds.n_positive
    if n_pos == 0:
        raise DataError(f"{ds.name}: no positive instances, imbalance ratio undefined")
    ir = imbalance_ratio(ds.n_instances, n_pos)
    return DatasetSummary(
        name=ds.name,
        n_instances=ds.n_instances,
        n_positive=n_pos,
        n_attributes=ds.n_attributes,
        positive_label=ds.positive_label,
        imbalance_ratio=ir,
    )


def write_summaries(summaries: Sequence[DatasetSummary], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(DatasetSummary.HEADER)
    for s in summaries:
        writer.writerow(s.as_row())


@dataclass(frozen=True)
class FoldPlan:
    fold_count: int
    assignments: np.ndarray
    seed: int | None = None

    def test_index(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_index(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    def splits(self):
        for f in range(self.fold_count):
            yield f, self.train_index(f), self.test_index(f)


def make_folds(ds: Dataset, fold_count: int = 10, seed=None) -> FoldPlan:
    """Stratified fold assignment.

    Each class is shuffled and dealt round-robin over the folds. Negatives
    start dealing where positives stopped so fold sizes differ by at most one.
    If the smaller class has fewer members than ``fold_count`` the count is
    reduced to that size, except for leave-one-out (``fold_count == n``),
    where every instance simply gets its own fold.
    """
    if fold_count < 2:
        raise DataError(f"fold_count must be >= 2, got {fold_count}")
    n = ds.n_instances
    pos = np.flatnonzero(ds.labels)
    neg = np.flatnonzero(~ds.labels)
    if pos.size == 0 or neg.size == 0:
        raise DataError(f"{ds.name}: cannot stratify with an empty class")
    smallest = min(pos.size, neg.size)
    if fold_count != n and smallest < fold_count:
        logger.warning(
            "%s: smallest class has %d members, reducing folds from %d to %d",
            ds.name, smallest, fold_count, smallest,
        )
        fold_count = smallest
        if fold_count < 2:
            raise DataError(f"{ds.name}: a class has a single member, cannot cross-validate")

    rng = np.random.default_rng(seed)
    assignments = np.empty(n, dtype=np.int64)
    pos = rng.permutation(pos)
    neg = rng.permutation(neg)
    assignments[pos] = np.arange(pos.size) % fold_count
    assignments[neg] = (np.arange(neg.size) + pos.size) % fold_count
    assignments.setflags(write=False)
    return FoldPlan(fold_count=fold_count, assignments=assignments, seed=seed)
