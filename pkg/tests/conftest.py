import csv

import numpy as np
import pytest

from ugrwo.data import Dataset


def unit_ball(rng, n, m=2):
    v = rng.standard_normal((n, m))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * rng.random((n, 1)) ** (1.0 / m)


def make_dataset(minority, majority, name="toy"):
    minority = np.asarray(minority, dtype=float)
    majority = np.asarray(majority, dtype=float)
    X = np.vstack([minority, majority])
    y = np.r_[np.ones(len(minority), bool), np.zeros(len(majority), bool)]
    return Dataset(X, y, (), name=name)


def two_gaussians(seed, n_maj=1000, n_min=100, shift=1.5, m=2):
    rng = np.random.default_rng(seed)
    return make_dataset(rng.normal(shift, 1.0, (n_min, m)), rng.normal(0.0, 1.0, (n_maj, m)))


def write_csv(path, ds, label_col="class", pos="pos", neg="neg"):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*ds.columns, label_col])
        for row, lab in zip(ds.features, ds.labels):
            w.writerow([*(repr(float(v)) for v in row), pos if lab else neg])
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# criterion -> list of (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[criterion]
        verdict = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        details = "; ".join(d for ok, d in parts if not ok) or parts[-1][1]
        terminalreporter.write_line(f"criterion {criterion}: {verdict}  {details}")
