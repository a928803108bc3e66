"""Acceptance suite, one test (or parametrized group) per criterion.

Every check records its outcome in ``conftest.ACCEPTANCE`` before asserting,
so the terminal summary prints one PASS/FAIL line per criterion.

Set ``UGRWO_UCI_DIR`` to a directory of real benchmark CSVs (named as in
``TABLE_ROWS``, label column ``class``) to run criterion 1 on them instead of
the generated count-matched fixtures.
"""

import csv
import os
import zlib

import numpy as np
import pytest

from ugrwo import runner
from ugrwo.cli import EXIT_OK, main
from ugrwo.graph import mutual_adjacency
from ugrwo.metrics import ConfusionCounts, auc, derive_metrics
from ugrwo.sampling import moments, rwo_generate, ugrwo_sample

from conftest import ACCEPTANCE, make_dataset, two_gaussians, unit_ball, write_csv
from oracles import brute_auc, brute_mutual


def record(criterion, ok, detail):
    ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))
    assert ok, detail


# --- 1: benchmark characteristics

# name, instances, positives, attributes, positive label, IR
TABLE_ROWS = [
    ("Breast_w", 699, 241, 9, "Malignant", 1.90),
    ("Diabetes", 768, 268, 8, "Tested_positive", 1.86),
    ("Glass", 214, 17, 9, "3", 11.58),
    ("Ionosphere", 351, 126, 34, "B", 1.78),
    ("Musk", 476, 208, 168, "Non-Musk", 1.77),
    ("Satimage", 6430, 625, 36, "2", 9.28),
    ("Segmentation", 1500, 205, 19, "brickface", 6.31),
    ("Sonar", 208, 97, 60, "Rock", 1.14),
    ("Vehicle", 846, 199, 18, "Van", 3.25),
]


def _fixture_csv(directory, name, n, pos, m, label):
    rng = np.random.default_rng(zlib.crc32(name.encode()))
    labels = np.array([label] * pos + ["other"] * (n - pos))
    rng.shuffle(labels)
    path = os.path.join(directory, f"{name}.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"a{i}" for i in range(m)] + ["class"])
        for lab in labels:
            w.writerow([f"{v:.4f}" for v in rng.normal(size=m)] + [lab])
    return path


@pytest.mark.parametrize("row", TABLE_ROWS, ids=[r[0] for r in TABLE_ROWS])
def test_c1_dataset_characteristics(row, tmp_path, capsys):
    name, n, pos, m, label, ir = row
    real_dir = os.environ.get("UGRWO_UCI_DIR")
    if real_dir and os.path.exists(os.path.join(real_dir, f"{name}.csv")):
        path = os.path.join(real_dir, f"{name}.csv")
    else:
        path = _fixture_csv(str(tmp_path), name, n, pos, m, label)
    assert main(["dataset-info", "--data", path, "--label-col", "class", "--positive", label]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    got = next(csv.DictReader(out))
    counts_ok = (int(got["instances"]), int(got["positives"]), int(got["attributes"])) == (n, pos, m)
    ir_ok = abs(float(got["IR"]) - ir) <= 0.01 + 1e-9
    record(1, counts_ok and ir_ok,
           f"{name}: got {got['instances']}/{got['positives']}/{got['attributes']} IR {got['IR']}, "
           f"expected {n}/{pos}/{m} IR {ir:.2f}")


# --- 2: random-walk synthesis preserves mean and spread


def test_c2_rwo_moment_preservation():
    passes = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        minority = rng.normal(5.0, 2.0, size=(1000, 3))
        syn = rwo_generate(minority, 5, rng)
        st = moments(minority)
        mean_ok = np.abs(syn.mean(axis=0) - st.mu) <= 4 * st.sigma / np.sqrt(5000)
        std_ok = np.abs(syn.std(axis=0) - st.sigma) <= 0.05 * st.sigma
        passes += bool(mean_ok.all() and std_ok.all())
    record(2, passes >= 99, f"{passes}/100 seeds within tolerance")


# --- 3: mutual kNN graph against brute force


def test_c3_graph_oracle():
    rng = np.random.default_rng(303)
    matches = 0
    for _ in range(50):
        k = int(rng.choice([3, 5, 10, 15]))
        n = int(rng.integers(k + 1, 201))
        m = int(rng.integers(1, 11))
        pts = rng.normal(size=(n, m))
        g = mutual_adjacency(pts, k)
        A = g.adjacency
        same = (A == np.array(brute_mutual(pts, k))).all()
        matches += bool(same and (A == A.T).all() and (g.degrees <= k).all())
    record(3, matches == 50, f"{matches}/50 point sets equal to the brute-force graph")


# --- 4: planted outliers


def test_c4_planted_outliers():
    clean = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        far = np.array([[100.0, 0.0]])
        minority = np.vstack([unit_ball(rng, 30), far])
        majority = np.vstack([unit_ball(rng, 30) + [5.0, 5.0], far + [5.0, 5.0] + [0.0, 100.0]])
        ds = make_dataset(minority, majority)
        res = ugrwo_sample(ds, 3, 3, seed=rng)
        near_outlier = np.linalg.norm(res.synthetic - far, axis=1) < 50
        maj_outlier = len(minority) + len(majority) - 1  # last row of ``ds``
        clean += bool(not near_outlier.any() and maj_outlier in res.dropped_majority)
    record(4, clean == 20, f"{clean}/20 seeds: no synthetic near the minority outlier, majority outlier dropped")


# --- 5: AUC against pair counting


def test_c5_auc_oracle():
    rng = np.random.default_rng(505)
    good = 0
    for _ in range(200):
        n = int(rng.integers(2, 501))
        labels = rng.random(n) < rng.uniform(0.05, 0.95)
        labels[0], labels[1] = True, False
        scores = np.round(rng.random(n), int(rng.integers(1, 4)))  # coarse grids force ties
        a = auc(scores, labels)
        good += bool(
            a == brute_auc(scores.tolist(), labels.tolist())
            and auc(np.exp(scores), labels) == a
            and auc(scores ** 3 + 2 * scores, labels) == a
        )
    record(5, good == 200, f"{good}/200 vectors equal to pair counting and transform-invariant")


# --- 6: metric arithmetic


def test_c6_metric_arithmetic():
    r = derive_metrics(ConfusionCounts(tp=50, fn=10, fp=5, tn=100))
    got = [round(v, 4) for v in (r.tp_rate, r.precision_min, r.f_min, r.tn_rate, r.g_mean, r.accuracy)]
    want = [0.8333, 0.9091, 0.8696, 0.9524, 0.8909, 0.9091]
    record(6, got == want, f"got {got}")


# --- 7: end to end on two overlapping Gaussians


@pytest.mark.slow
def test_c7_end_to_end(tmp_path):
    ds = two_gaussians(seed=2024, n_maj=1000, n_min=100, shift=1.5)
    path = write_csv(tmp_path / "gauss.csv", ds)
    grid = runner.ExperimentGrid(
        (runner.DatasetSpec("gauss", str(path), "class", "pos"),),
        rates=(100,), ks=(3,), folds=10, master_seed=7,
    )
    records = runner.run_grid(grid, workers=min(8, os.cpu_count() or 1))
    assert not runner.failed_cells(records)
    means = {(s.method, s.classifier): s.means for s in runner.aggregate(records)}
    f_ugrwo = means[("UGRWO", "KNN")]["f_min"]
    f_none = means[("none", "KNN")]["f_min"]
    ratios = {
        r["classifier"]: float(r["auc_ratio"])
        for r in runner.auc_ratio_rows(records) if r["method"] == "UGRWO"
    }
    ok = f_ugrwo >= f_none and len(ratios) == 4 and min(ratios.values()) >= 0.95
    record(7, ok,
           f"5-NN F-min UGRWO {f_ugrwo:.4f} vs none {f_none:.4f}; "
           f"UGRWO AUCRatio {', '.join(f'{c} {v:.4f}' for c, v in sorted(ratios.items()))}")


# --- 8: determinism of the miniature grid


def test_c8_byte_identical_reruns(tmp_path):
    for seed, name in ((31, "a"), (32, "b")):
        write_csv(tmp_path / f"{name}.csv", two_gaussians(seed=seed, n_maj=90, n_min=18))
    cfg = tmp_path / "mini.cfg"
    cfg.write_text(
        "dataset = a a.csv class pos\n"
        "dataset = b b.csv class pos\n"
        "rates = 100, 200\nks = 3, 5\nfolds = 3\nseed = 123\n"
    )
    outputs = []
    for run in ("first", "second"):
        out = tmp_path / run
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        outputs.append({f: (out / f).read_bytes() for f in ("records.csv", "wins.csv", "aucratio.csv")})
    same = [f for f in outputs[0] if outputs[0][f] == outputs[1][f]]
    record(8, len(same) == 3, f"identical: {', '.join(same)}")
