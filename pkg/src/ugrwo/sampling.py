"""Resampling methods for binary imbalanced data.

All samplers take a training :class:`~ugrwo.data.Dataset` and return a
:class:`ResampleResult`. Randomness comes from a ``numpy.random.Generator``
(PCG64); anything accepted by ``numpy.random.default_rng`` may be passed as
``seed``. Gaussian perturbations use ``Generator.standard_normal``
(ziggurat), roulette and SMOTE draws use ``Generator.random`` and
``Generator.integers``.

Output rows are laid out as: retained originals in input order, then the
synthetic rows in generation order (pass by pass, row by row).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .data import DISCRETE, Dataset
from .graph import knn_lists, select_dense

ORIG_MIN = 0
ORIG_MAJ = 1
SYNTHETIC = 2
PROVENANCE_NAMES = {ORIG_MIN: "orig-min", ORIG_MAJ: "orig-maj", SYNTHETIC: "synthetic"}

METHODS = ("none", "RO", "RU", "SMOTE", "RWO", "GRWO", "UGRWO")
USES_RATE = frozenset({"RO", "SMOTE", "RWO", "GRWO", "UGRWO"})
USES_K = frozenset({"SMOTE", "GRWO", "UGRWO"})


class SamplingError(ValueError):
    pass


class NoMajoritySurvivorsError(SamplingError):
    """The majority graph kept no vertex."""


class NoMinoritySelectedError(SamplingError):
    """The minority graph kept no vertex; the filter is too strict for this k."""


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class SamplerConfig:
    method: str = "UGRWO"
    rate_percent: int = 100
    k: int = 5
    seed: int | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise SamplingError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.rate_percent <= 0 or self.rate_percent % 100:
            raise SamplingError(
                f"rate_percent must be a positive multiple of 100, got {self.rate_percent}"
            )
        if self.k < 1:
            raise SamplingError(f"k must be >= 1, got {self.k}")

    @property
    def M(self) -> int:
        return self.rate_percent // 100


@dataclass(frozen=True)
class MomentStats:
    mu: np.ndarray
    sigma: np.ndarray
    n: int


@dataclass(frozen=True)
class ResampleResult:
    dataset: Dataset
    provenance: np.ndarray
    source_index: np.ndarray
    dropped_majority: np.ndarray
    selected_minority: np.ndarray | None = None

    @property
    def n_synthetic(self) -> int:
        return int((self.provenance == SYNTHETIC).sum())

    @property
    def synthetic(self) -> np.ndarray:
        return self.dataset.features[self.provenance == SYNTHETIC]

    def write_csv(self, fh) -> None:
        """Debug dump with a trailing ``provenance`` column."""
        import csv

        ds = self.dataset
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*ds.columns, "label", "provenance"])
        for row, lab, prov in zip(ds.features, ds.labels, self.provenance):
            writer.writerow(
                [*(repr(float(v)) for v in row), int(lab), PROVENANCE_NAMES[int(prov)]]
            )


def moments(minority: np.ndarray) -> MomentStats:
    """Per-attribute mean and population standard deviation (divisor n)."""
    X = np.asarray(minority, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise SamplingError("moments need a non-empty 2-D minority matrix")
    n = X.shape[0]
    mu = X.sum(axis=0) / n
    sigma = np.sqrt(((X - mu) ** 2).sum(axis=0) / n)
    return MomentStats(mu=mu, sigma=sigma, n=n)


def roulette_draw(values: Sequence, seed=None):
    """Draw one value with probability equal to its observed frequency."""
    if len(values) == 0:
        raise SamplingError("roulette wheel needs at least one value")
    rng = as_rng(seed)
    outcomes, counts = np.unique(np.asarray(values), return_counts=True)
    cdf = np.cumsum(counts) / counts.sum()
    slot = int(np.searchsorted(cdf, rng.random(), side="right"))
    return outcomes[min(slot, outcomes.size - 1)].item()


def _roulette_column(column: np.ndarray, size: tuple[int, ...], rng) -> np.ndarray:
    outcomes, counts = np.unique(column, return_counts=True)
    cdf = np.cumsum(counts) / counts.sum()
    slots = np.searchsorted(cdf, rng.random(size), side="right")
    return outcomes[np.minimum(slots, outcomes.size - 1)]


def rwo_generate(minority: np.ndarray, M: int, seed=None, kinds: Sequence[str] | None = None):
    """Random-walk synthesis: ``M`` passes over the rows, one synthetic per row per pass.

    Continuous attribute ``i`` of the synthetic made from row ``j`` is
    ``x[j, i] - sigma[i] / sqrt(n) * r`` with ``r`` a fresh standard normal.
    Discrete attributes are redrawn from the column's empirical distribution.
    Normals are drawn first as one ``(M, n, m)`` block, then one ``(M, n)``
    block of uniforms per discrete column, left to right.
    """
    X = np.asarray(minority, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise SamplingError("random-walk synthesis needs a non-empty minority set")
    if M < 1:
        raise SamplingError(f"M must be >= 1, got {M}")
    rng = as_rng(seed)
    n, m = X.shape
    stats = moments(X)
    r = rng.standard_normal((M, n, m))
    out = X[None, :, :] - (stats.sigma / np.sqrt(n)) * r
    if kinds is not None:
        for i, kind in enumerate(kinds):
            if kind == DISCRETE:
                out[:, :, i] = _roulette_column(X[:, i], (M, n), rng)
    return out.reshape(M * n, m)


def _assemble(ds: Dataset, keep: np.ndarray, synthetic: np.ndarray,
              selected=None) -> ResampleResult:
    keep = np.asarray(keep, dtype=np.int64)
    kept_X = ds.features[keep]
    kept_y = ds.labels[keep]
    n_syn = synthetic.shape[0]
    X = np.vstack([kept_X, synthetic.reshape(n_syn, ds.n_attributes)])
    y = np.concatenate([kept_y, np.ones(n_syn, dtype=bool)])
    provenance = np.concatenate([
        np.where(kept_y, ORIG_MIN, ORIG_MAJ),
        np.full(n_syn, SYNTHETIC),
    ]).astype(np.int8)
    source = np.concatenate([keep, np.full(n_syn, -1, dtype=np.int64)])
    kept = np.zeros(ds.n_instances, dtype=bool)
    kept[keep] = True
    dropped = np.flatnonzero(~kept & ~ds.labels)
    return ResampleResult(
        dataset=replace(ds, features=X, labels=y),
        provenance=provenance,
        source_index=source,
        dropped_majority=dropped,
        selected_minority=None if selected is None else np.asarray(selected, dtype=np.int64),
    )


def _minority_index(ds: Dataset) -> np.ndarray:
    idx = np.flatnonzero(ds.labels)
    if idx.size == 0:
        raise SamplingError(f"{ds.name}: empty minority class")
    return idx


def no_sample(ds: Dataset) -> ResampleResult:
    return _assemble(ds, np.arange(ds.n_instances), np.empty((0, ds.n_attributes)))


def ro_sample(ds: Dataset, M: int, seed=None) -> ResampleResult:
    """Append ``M * n_min`` minority rows drawn uniformly with replacement."""
    min_idx = _minority_index(ds)
    if M < 1:
        raise SamplingError(f"M must be >= 1, got {M}")
    rng = as_rng(seed)
    picks = rng.integers(0, min_idx.size, size=M * min_idx.size)
    return _assemble(ds, np.arange(ds.n_instances), ds.features[min_idx[picks]])


def ru_sample(ds: Dataset, target_ratio: float = 1.0, seed=None) -> ResampleResult:
    """Drop majority rows uniformly until majority/minority equals ``target_ratio``."""
    min_idx = _minority_index(ds)
    maj_idx = np.flatnonzero(~ds.labels)
    target = int(round(target_ratio * min_idx.size))
    if target < 1:
        raise SamplingError(f"target ratio {target_ratio} leaves no majority rows")
    if target > maj_idx.size:
        raise SamplingError(
            f"target ratio {target_ratio} needs {target} majority rows, only {maj_idx.size} present"
        )
    rng = as_rng(seed)
    survivors = np.sort(rng.choice(maj_idx, size=target, replace=False))
    keep = np.sort(np.concatenate([min_idx, survivors]))
    return _assemble(ds, keep, np.empty((0, ds.n_attributes)))


def smote_sample(ds: Dataset, M: int, k: int = 5, seed=None) -> ResampleResult:
    """Interpolate towards a random one of the ``k`` nearest minority neighbours.

    ``k`` is clamped to ``n_min - 1``. Discrete attributes take the value of
    whichever endpoint the gap lands closer to.
    """
    min_idx = _minority_index(ds)
    if min_idx.size < 2:
        raise SamplingError(f"{ds.name}: SMOTE needs at least two minority rows")
    if M < 1:
        raise SamplingError(f"M must be >= 1, got {M}")
    X = ds.features[min_idx]
    n = X.shape[0]
    k = min(k, n - 1)
    rng = as_rng(seed)
    neighbours = knn_lists(X, k)
    choice = rng.integers(0, k, size=(M, n))
    gap = rng.random((M, n, 1))
    partner = X[neighbours[np.arange(n)[None, :], choice]]
    synthetic = X[None] + gap * (partner - X[None])
    disc = ds.discrete_mask
    if disc.any():
        take_partner = np.broadcast_to(gap >= 0.5, synthetic.shape) & disc
        base = np.broadcast_to(X[None], synthetic.shape)
        synthetic[..., disc] = np.where(take_partner, partner, base)[..., disc]
    return _assemble(ds, np.arange(ds.n_instances), synthetic.reshape(M * n, -1))


def rwo_sample(ds: Dataset, M: int, seed=None) -> ResampleResult:
    min_idx = _minority_index(ds)
    synthetic = rwo_generate(ds.features[min_idx], M, seed, ds.kinds)
    return _assemble(ds, np.arange(ds.n_instances), synthetic)


def _selected_minority(ds: Dataset, k: int) -> np.ndarray:
    min_idx = _minority_index(ds)
    selected = min_idx[select_dense(ds.features[min_idx], k)]
    if selected.size == 0:
        raise NoMinoritySelectedError(
            f"{ds.name}: minority graph with k={k} keeps no vertex"
        )
    return selected


def grwo_sample(ds: Dataset, M: int, k: int, seed=None) -> ResampleResult:
    """Random-walk synthesis restricted to graph-selected minority rows.

    Moments come from the selected rows only. All original rows are kept.
    """
    selected = _selected_minority(ds, k)
    synthetic = rwo_generate(ds.features[selected], M, seed, ds.kinds)
    return _assemble(ds, np.arange(ds.n_instances), synthetic, selected=selected)


def ugrwo_sample(ds: Dataset, M: int, k: int, seed=None) -> ResampleResult:
    """Prune sparse majority rows, then over-sample the dense minority rows.

    Step one keeps majority rows whose mutual-kNN degree within the majority
    reaches ``k``. Step two runs :func:`grwo_sample`'s synthesis on the
    minority rows that pass the same test within the minority. No minority
    row is ever removed.
    """
    maj_idx = np.flatnonzero(~ds.labels)
    if maj_idx.size == 0:
        raise SamplingError(f"{ds.name}: empty majority class")
    survivors = maj_idx[select_dense(ds.features[maj_idx], k)]
    if survivors.size == 0:
        raise NoMajoritySurvivorsError(
            f"{ds.name}: majority graph with k={k} keeps no vertex"
        )
    selected = _selected_minority(ds, k)
    synthetic = rwo_generate(ds.features[selected], M, seed, ds.kinds)
    keep = np.sort(np.concatenate([np.flatnonzero(ds.labels), survivors]))
    return _assemble(ds, keep, synthetic, selected=selected)


def resample(ds: Dataset, config: SamplerConfig, seed=None) -> ResampleResult:
    """Dispatch on ``config.method``. ``seed`` overrides ``config.seed`` when given."""
    rng = as_rng(config.seed if seed is None else seed)
    method = config.method
    if method == "none":
        return no_sample(ds)
    if method == "RO":
        return ro_sample(ds, config.M, rng)
    if method == "RU":
        return ru_sample(ds, 1.0, rng)
    if method == "SMOTE":
        return smote_sample(ds, config.M, config.k, rng)
    if method == "RWO":
        return rwo_sample(ds, config.M, rng)
    if method == "GRWO":
        return grwo_sample(ds, config.M, config.k, rng)
    return ugrwo_sample(ds, config.M, config.k, rng)
