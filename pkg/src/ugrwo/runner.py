"""Cross-validated experiment grid over datasets, samplers and classifiers.

Each job covers one (dataset, method, rate, k) combination: for every fold
the training part is resampled once and every requested classifier is
trained on the result and scored on the untouched test part. Seeds for fold
plans and samplers are derived from the master seed and the cell identity
by hashing, so a cell's output does not depend on which other cells run.
"""

from __future__ import annotations

import csv
import hashlib
import logging
import os
import shlex
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from . import classify, metrics
from .data import Dataset, make_folds, read_dataset
from .sampling import METHODS, USES_K, USES_RATE, SamplerConfig, resample

logger = logging.getLogger(__name__)

DEFAULT_RATES = (100, 200, 300, 400, 500)
DEFAULT_KS = (3, 5, 10, 15)

RECORD_FIELDS = (
    "dataset", "method", "rate", "k", "classifier", "fold", "status",
    "n_train", "n_synthetic", "n_dropped_majority", "n_selected_minority",
    "f_min", "f_maj", "acc", "g_mean", "tp_rate", "auc",
    "precision_min", "precision_maj", "tn_rate", "undefined", "error",
)
SUMMARY_FIELDS = (
    "dataset", "method", "rate", "k", "classifier", "folds",
    *metrics.REPORT_COLUMNS,
)
AUCRATIO_FIELDS = ("dataset", "classifier", "rate", "method", "k", "auc", "auc_ratio")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    path: str
    label_column: str
    positive_label: str
    discrete: tuple[str, ...] = ()

    def load(self) -> Dataset:
        return _load_cached(self)


@lru_cache(maxsize=16)
def _load_cached(spec: DatasetSpec) -> Dataset:
    return read_dataset(
        spec.path, spec.label_column, spec.positive_label, spec.discrete, name=spec.name
    )


@dataclass(frozen=True)
class ExperimentGrid:
    datasets: tuple[DatasetSpec, ...]
    methods: tuple[str, ...] = METHODS
    rates: tuple[int, ...] = DEFAULT_RATES
    ks: tuple[int, ...] = DEFAULT_KS
    classifiers: tuple[str, ...] = classify.CLASSIFIERS
    folds: int = 10
    master_seed: int = 0

    def __post_init__(self):
        if not self.datasets:
            raise ConfigError("at least one dataset is required")
        names = [d.name for d in self.datasets]
        if len(set(names)) != len(names):
            raise ConfigError(f"dataset names must be unique: {names}")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; choose from {METHODS}")
        for c in self.classifiers:
            if c not in classify.CLASSIFIERS:
                raise ConfigError(f"unknown classifier {c!r}; choose from {classify.CLASSIFIERS}")
        for r in self.rates:
            if r <= 0 or r % 100:
                raise ConfigError(f"rates must be positive multiples of 100, got {r}")
        for k in self.ks:
            if k < 1:
                raise ConfigError(f"k must be >= 1, got {k}")
        if not (self.methods and self.classifiers):
            raise ConfigError("methods and classifiers must be non-empty")
        if any(m in USES_RATE for m in self.methods) and not self.rates:
            raise ConfigError("rates must be non-empty for over-sampling methods")
        if any(m in USES_K for m in self.methods) and not self.ks:
            raise ConfigError("ks must be non-empty for graph/neighbour methods")
        if self.folds < 2:
            raise ConfigError(f"folds must be >= 2, got {self.folds}")

    def variants(self) -> list[tuple[str, int, int]]:
        """(method, rate, k) triples; parameters a method ignores are reported as 0."""
        out = []
        for method in self.methods:
            rates = self.rates if method in USES_RATE else (0,)
            ks = self.ks if method in USES_K else (0,)
            for rate in rates:
                for k in ks:
                    if (method, rate, k) not in out:
                        out.append((method, rate, k))
        return out


def substream_seed(master_seed: int, *identity) -> np.random.SeedSequence:
    """Child seed for a named cell; a pure function of the master seed and identity."""
    text = "\x1f".join(str(part) for part in identity)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 32, 4)]
    return np.random.SeedSequence([int(master_seed) & 0xFFFFFFFF, *words])


def fold_seed(master_seed: int, dataset: str) -> int:
    ss = substream_seed(master_seed, "folds", dataset)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class RunRecord:
    dataset: str
    method: str
    rate: int
    k: int
    classifier: str
    fold: int
    status: str = "ok"
    error: str = ""
    n_train: int = 0
    n_synthetic: int = 0
    n_dropped_majority: int = 0
    n_selected_minority: int = 0
    report: metrics.MetricsReport | None = None
    wall_time: float = 0.0

    @property
    def cell(self) -> tuple:
        return (self.dataset, self.method, self.rate, self.k, self.classifier)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def as_row(self) -> dict[str, str]:
        row = {
            "dataset": self.dataset, "method": self.method, "rate": str(self.rate),
            "k": str(self.k), "classifier": self.classifier, "fold": str(self.fold),
            "status": self.status, "n_train": str(self.n_train),
            "n_synthetic": str(self.n_synthetic),
            "n_dropped_majority": str(self.n_dropped_majority),
            "n_selected_minority": str(self.n_selected_minority),
            "undefined": "", "error": self.error,
        }
        if self.report is not None:
            values = dict(self.report.row())
            values.update(
                precision_min=self.report.precision_min,
                precision_maj=self.report.precision_maj,
                tn_rate=self.report.tn_rate,
            )
            row.update({name: repr(float(v)) for name, v in values.items()})
            row["undefined"] = ";".join(sorted(self.report.undefined))
        return row

    @classmethod
    def from_row(cls, row: dict[str, str]) -> "RunRecord":
        rec = cls(
            dataset=row["dataset"], method=row["method"], rate=int(row["rate"]),
            k=int(row["k"]), classifier=row["classifier"], fold=int(row["fold"]),
            status=row["status"], error=row.get("error", ""),
            n_train=int(row["n_train"]), n_synthetic=int(row["n_synthetic"]),
            n_dropped_majority=int(row["n_dropped_majority"]),
            n_selected_minority=int(row["n_selected_minority"]),
        )
        if rec.ok:
            rec.report = metrics.MetricsReport(
                f_min=float(row["f_min"]), f_maj=float(row["f_maj"]),
                accuracy=float(row["acc"]), g_mean=float(row["g_mean"]),
                tp_rate=float(row["tp_rate"]), auc=float(row["auc"]),
                precision_min=float(row["precision_min"]),
                precision_maj=float(row["precision_maj"]),
                tn_rate=float(row["tn_rate"]),
                undefined=frozenset(filter(None, row.get("undefined", "").split(";"))),
            )
        return rec


class LeakageError(AssertionError):
    pass


def audit_no_leakage(result, train_index: np.ndarray, test_index: np.ndarray) -> None:
    """Every resampled row must trace back to a training row (or be synthetic)."""
    sources = result.source_index[result.source_index >= 0]
    if np.intersect1d(train_index[sources], test_index).size:
        raise LeakageError("test-fold rows found in the resampled training set")


def evaluate(model: classify.TrainedModel, test: Dataset) -> metrics.MetricsReport:
    scores = np.asarray(model.predict_score(test.features), dtype=float)
    counts = metrics.confusion(test.labels, scores >= classify.THRESHOLD)
    return metrics.derive_metrics(counts, auc_value=metrics.auc(scores, test.labels))


@dataclass(frozen=True)
class Job:
    spec: DatasetSpec
    method: str
    rate: int
    k: int
    classifiers: tuple[str, ...]
    folds: int
    master_seed: int


def _error_text(exc: BaseException) -> str:
    return f"{type(exc).__name__}: {exc}".replace("\n", " ")


def run_job(job: Job) -> list[RunRecord]:
    """Run every fold of one (dataset, method, rate, k) cell for all classifiers."""
    name = job.spec.name

    def records(fold, **kw):
        return [
            RunRecord(name, job.method, job.rate, job.k, c, fold, **kw)
            for c in job.classifiers
        ]

    try:
        ds = job.spec.load()
        ds.require_both_classes()
        plan = make_folds(ds, job.folds, fold_seed(job.master_seed, name))
    except Exception as exc:  # the whole cell fails, the grid carries on
        logger.error("%s: %s", name, exc)
        return records(-1, status="error", error=_error_text(exc))

    config = SamplerConfig(job.method, job.rate or 100, job.k or 1)
    out: list[RunRecord] = []
    for fold, train_idx, test_idx in plan.splits():
        t0 = time.perf_counter()
        train, test = ds.subset(train_idx), ds.subset(test_idx)
        seed = substream_seed(job.master_seed, name, job.method, job.rate, job.k, fold)
        try:
            result = resample(train, config, seed=np.random.default_rng(seed))
            audit_no_leakage(result, train_idx, test_idx)
        except Exception as exc:
            logger.warning("%s/%s/%s/%s fold %d: %s", name, job.method, job.rate, job.k, fold, exc)
            out.extend(records(fold, status="error", error=_error_text(exc)))
            continue
        sample_time = time.perf_counter() - t0
        counts = dict(
            n_train=result.dataset.n_instances,
            n_synthetic=result.n_synthetic,
            n_dropped_majority=int(result.dropped_majority.size),
            n_selected_minority=(
                0 if result.selected_minority is None else int(result.selected_minority.size)
            ),
        )
        for clf in job.classifiers:
            t1 = time.perf_counter()
            rec = RunRecord(name, job.method, job.rate, job.k, clf, fold, **counts)
            try:
                model = classify.train(clf, result.dataset)
                rec.report = evaluate(model, test)
            except Exception as exc:
                rec.status, rec.error = "error", _error_text(exc)
            rec.wall_time = sample_time + time.perf_counter() - t1
            out.append(rec)
    return out


def jobs_for(grid: ExperimentGrid) -> list[Job]:
    return [
        Job(spec, method, rate, k, tuple(grid.classifiers), grid.folds, grid.master_seed)
        for spec in grid.datasets
        for method, rate, k in grid.variants()
    ]


def run_grid(grid: ExperimentGrid, workers: int = 1) -> list[RunRecord]:
    """Execute all cells. Output order follows grid order, never completion order."""
    jobs = jobs_for(grid)
    if workers <= 1 or len(jobs) <= 1:
        batches = [run_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(run_job, jobs))
    return [rec for batch in batches for rec in batch]


# ---------------------------------------------------------------------------
# aggregation and tables


@dataclass
class CellSummary:
    dataset: str
    method: str
    rate: int
    k: int
    classifier: str
    folds: int
    means: dict[str, float] = field(default_factory=dict)


def aggregate(records: Iterable[RunRecord]) -> list[CellSummary]:
    """Arithmetic fold means per cell; cells with any failed fold are left out."""
    by_cell: dict[tuple, list[RunRecord]] = {}
    for rec in records:
        by_cell.setdefault(rec.cell, []).append(rec)
    out = []
    for cell, recs in by_cell.items():
        if not all(r.ok for r in recs):
            continue
        rows = [r.report.row() for r in recs]
        means = {c: float(np.mean([row[c] for row in rows])) for c in metrics.REPORT_COLUMNS}
        out.append(CellSummary(*cell, folds=len(recs), means=means))
    return out


def failed_cells(records: Iterable[RunRecord]) -> list[tuple]:
    seen = []
    for rec in records:
        if not rec.ok and rec.cell not in seen:
            seen.append(rec.cell)
    return seen


def _best_over_k(summaries: Sequence[CellSummary]):
    """Per (dataset, classifier, method, rate): the best fold-mean value over k, per metric."""
    best: dict[tuple, dict[str, tuple[float, int]]] = {}
    for s in summaries:
        key = (s.dataset, s.classifier, s.method, s.rate)
        slot = best.setdefault(key, {})
        for metric, value in s.means.items():
            if metric not in slot or value > slot[metric][0]:
                slot[metric] = (value, s.k)
    return best


def _cases(summaries: Sequence[CellSummary]) -> dict[tuple[str, str], list[int]]:
    """Rates compared per (dataset, classifier); rate 0 if no method uses one."""
    rates: dict[tuple[str, str], set] = defaultdict(set)
    for s in summaries:
        rates[(s.dataset, s.classifier)].add(s.rate)
    cases = {}
    for key, found in rates.items():
        real = sorted(r for r in found if r)
        cases[key] = real or [0]
    return cases


def _expand(summaries: Sequence[CellSummary]):
    """Yield (dataset, classifier, rate, method, {metric: (value, k)}) per comparison.

    Rate-free methods (none, RU) take part in every rate's comparison.
    """
    best = _best_over_k(summaries)
    cases = _cases(summaries)
    methods_for = defaultdict(list)
    for dataset, classifier, method, rate in best:
        if method not in methods_for[(dataset, classifier)]:
            methods_for[(dataset, classifier)].append(method)
    for (dataset, classifier), rates in cases.items():
        for rate in rates:
            for method in methods_for[(dataset, classifier)]:
                slot = best.get((dataset, classifier, method, rate))
                if slot is None:
                    slot = best.get((dataset, classifier, method, 0))
                if slot is not None:
                    yield dataset, classifier, rate, method, slot


def summarize_wins(records: Iterable[RunRecord], methods: Sequence[str] | None = None,
                   classifiers: Sequence[str] | None = None) -> list[dict[str, str]]:
    """Win counts laid out as rows of classifier, method and one column per metric.

    A comparison is one (dataset, rate); each method contributes its best
    value over k. Comparisons missing a method (failed cells) are skipped
    with a warning.
    """
    records = list(records)
    # default ordering is first appearance in the records, i.e. grid order
    methods = list(methods or dict.fromkeys(r.method for r in records))
    classifiers = list(classifiers or dict.fromkeys(r.classifier for r in records))
    summaries = aggregate(records)
    entries = list(_expand(summaries))
    per_case = defaultdict(set)
    all_methods = defaultdict(set)
    for dataset, classifier, rate, method, _ in entries:
        per_case[(classifier, dataset, rate)].add(method)
        all_methods[classifier].add(method)
    complete = {
        key for key, present in per_case.items() if present == all_methods[key[0]]
    }
    for key in sorted(set(per_case) - complete, key=str):
        logger.warning("skipping incomplete comparison %s", key)
    results = [
        (classifier, method, (dataset, rate), metric, value)
        for dataset, classifier, rate, method, slot in entries
        if (classifier, dataset, rate) in complete
        for metric, (value, _k) in slot.items()
    ]
    wins = metrics.win_summary(results) if results else {}
    rows = []
    for clf in classifiers:
        for method in methods:
            if (clf, method, metrics.REPORT_COLUMNS[0]) not in wins:
                continue
            row = {"classifier": clf, "method": method}
            for col in metrics.REPORT_COLUMNS:
                row[metrics.COLUMN_TITLES[col]] = str(wins[(clf, method, col)])
            rows.append(row)
    return rows


def auc_ratio_rows(records: Iterable[RunRecord]) -> list[dict[str, str]]:
    summaries = aggregate(records)
    groups = defaultdict(list)
    for dataset, classifier, rate, method, slot in _expand(summaries):
        groups[(dataset, classifier, rate)].append((method, slot["auc"]))
    rows = []
    for (dataset, classifier, rate), entries in groups.items():
        ratios = metrics.auc_ratio({m: v for m, (v, _) in entries})
        for method, (value, k) in entries:
            rows.append({
                "dataset": dataset, "classifier": classifier, "rate": str(rate),
                "method": method, "k": str(k), "auc": repr(value),
                "auc_ratio": repr(ratios[method]),
            })
    return rows


def summary_rows(records: Iterable[RunRecord]) -> list[dict[str, str]]:
    rows = []
    for s in aggregate(records):
        row = {"dataset": s.dataset, "method": s.method, "rate": str(s.rate),
               "k": str(s.k), "classifier": s.classifier, "folds": str(s.folds)}
        row.update({c: repr(v) for c, v in s.means.items()})
        rows.append(row)
    return rows


def _write(path: str, header: Sequence[str], rows: Iterable[dict[str, str]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(header), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def wins_header() -> list[str]:
    return ["classifier", "method", *(metrics.COLUMN_TITLES[c] for c in metrics.REPORT_COLUMNS)]


def write_tables(records: Sequence[RunRecord], out_dir: str,
                 methods: Sequence[str] | None = None,
                 classifiers: Sequence[str] | None = None) -> list[dict[str, str]]:
    """Write summary.csv, wins.csv and aucratio.csv; return the win rows."""
    os.makedirs(out_dir, exist_ok=True)
    _write(os.path.join(out_dir, "summary.csv"), SUMMARY_FIELDS, summary_rows(records))
    wins = summarize_wins(records, methods, classifiers)
    _write(os.path.join(out_dir, "wins.csv"), wins_header(), wins)
    _write(os.path.join(out_dir, "aucratio.csv"), AUCRATIO_FIELDS, auc_ratio_rows(records))
    return wins


def write_outputs(records: Sequence[RunRecord], out_dir: str, grid: ExperimentGrid | None = None):
    """records.csv plus the derived tables. Wall times go to timings.csv only,
    so every other file is byte-reproducible."""
    os.makedirs(out_dir, exist_ok=True)
    _write(os.path.join(out_dir, "records.csv"), RECORD_FIELDS, (r.as_row() for r in records))
    _write(
        os.path.join(out_dir, "timings.csv"),
        ("dataset", "method", "rate", "k", "classifier", "fold", "wall_time"),
        ({"dataset": r.dataset, "method": r.method, "rate": str(r.rate), "k": str(r.k),
          "classifier": r.classifier, "fold": str(r.fold), "wall_time": f"{r.wall_time:.6f}"}
         for r in records),
    )
    return write_tables(
        records, out_dir,
        methods=grid.methods if grid else None,
        classifiers=grid.classifiers if grid else None,
    )


def read_records(path: str) -> list[RunRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [RunRecord.from_row(row) for row in csv.DictReader(fh)]


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunSettings:
    grid: ExperimentGrid
    out: str = "results"
    workers: int = 1


_LIST_KEYS = {"methods", "rates", "ks", "classifiers"}
_SCALAR_KEYS = {"folds", "seed", "workers", "out"}


def _split_list(value: str) -> list[str]:
    return [v for v in (p.strip() for p in value.replace(",", " ").split()) if v]


def parse_dataset_line(value: str, base_dir: str = ".") -> DatasetSpec:
    """``name path label_column positive_label [discrete=a,b]`` (shell quoting allowed)."""
    try:
        parts = shlex.split(value)
    except ValueError as exc:
        raise ConfigError(f"bad dataset line {value!r}: {exc}") from None
    discrete: tuple[str, ...] = ()
    rest = []
    for p in parts:
        if p.startswith("discrete="):
            discrete = tuple(filter(None, p[len("discrete="):].split(",")))
        else:
            rest.append(p)
    if len(rest) != 4:
        raise ConfigError(
            f"dataset line needs: name path label_column positive_label, got {value!r}"
        )
    name, path, label, positive = rest
    if not os.path.isabs(path):
        path = os.path.normpath(os.path.join(base_dir, path))
    return DatasetSpec(name, path, label, positive, discrete)


def parse_config(text: str, base_dir: str = ".", overrides: dict | None = None) -> RunSettings:
    """Parse the flat ``key = value`` format; see README for the schema.

    ``overrides`` maps the same keys to already-parsed values and wins over
    the file.
    """
    values: dict = {}
    datasets: list[DatasetSpec] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key == "dataset":
            datasets.append(parse_dataset_line(value, base_dir))
        elif key in _LIST_KEYS:
            values[key] = _split_list(value)
        elif key in _SCALAR_KEYS:
            values[key] = value
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value

    def ints(key, default):
        try:
            return tuple(int(v) for v in values.get(key, default))
        except ValueError:
            raise ConfigError(f"{key}: integers expected, got {values[key]!r}") from None

    def scalar(key, default):
        try:
            return int(values.get(key, default))
        except ValueError:
            raise ConfigError(f"{key}: integer expected, got {values[key]!r}") from None

    grid = ExperimentGrid(
        datasets=tuple(datasets),
        methods=tuple(values.get("methods", METHODS)),
        rates=ints("rates", DEFAULT_RATES),
        ks=ints("ks", DEFAULT_KS),
        classifiers=tuple(values.get("classifiers", classify.CLASSIFIERS)),
        folds=scalar("folds", 10),
        master_seed=scalar("seed", 0),
    )
    workers = scalar("workers", 1)
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    return RunSettings(grid=grid, out=str(values.get("out", "results")), workers=workers)


def load_config(path: str, overrides: dict | None = None) -> RunSettings:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, os.path.dirname(os.path.abspath(path)), overrides)


