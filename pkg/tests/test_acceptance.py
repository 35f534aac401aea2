"""The twelve acceptance criteria, one test each, with a PASS/FAIL line per criterion."""

from __future__ import annotations

import json
import math
import time

import numpy as np
import pytest

from accelstate.cli import dispatch
from accelstate.dsp import compute_derived_series, decompose_static_dynamic, segment_windows
from accelstate.evaluation import (
    ConfusionMatrix,
    GridSpec,
    confusion_and_metrics,
    gmean,
    gmean_threshold,
    metrics_from_confusion,
    outer_loaocv,
    roc_curve,
)
from accelstate.features import FEATURE_NAMES, MV_FEATURES, extract_feature_matrix, spectral_entropy
from accelstate.ingest import apply_clock_offset, estimate_drift_offset
from accelstate.learn import (
    ClassifierKind,
    GbParams,
    RfParams,
    SvmParams,
    fit_boosting,
    fit_classifier,
    fit_svm_model,
    predict_scores,
    standardize_fit,
)
from accelstate.pipeline import cohort_dataset
from accelstate.series import LabeledSegment, StateLabel, TriaxialSeries
from accelstate.synth import QUANTUM_G, SynthProfile, generate_animal, quantize

import oracles
from conftest import cohort_recordings

RESULTS: dict[str, str] = {}


@pytest.fixture
def verdict(capsys):
    def record(n: int | str, title: str, ok: bool, detail: str = "") -> None:
        label = f"{n:>2}" if isinstance(n, int) else f"{n:>3}"
        line = f"criterion {label} {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else "")
        RESULTS[str(n).zfill(3)] = line
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return record


def _series(xyz, rate=25.0, t0=0.0):
    xyz = np.asarray(xyz, dtype=float)
    return TriaxialSeries.from_arrays(t0 + np.arange(len(xyz)) / rate, xyz, "acc", rate)


# 1 ------------------------------------------------------------------------------------


def test_criterion_01_formula_fidelity(verdict):
    rng = np.random.default_rng(101)
    worst = 0.0
    for i in range(1000):
        m = int(rng.choice([25, 75, 125, 175, 225]))
        n = max(160, m + 10)
        scale = rng.uniform(0.05, 2.0)
        raw = quantize(rng.normal(0, scale, size=(n, 3)) + rng.normal(size=3))
        d = compute_derived_series(_series(raw))
        start = int(rng.integers(0, n - m + 1))
        got = extract_feature_matrix(d, [start], m)[0]
        sl = slice(start, start + m)
        want = np.array(
            oracles.window_features(
                *(raw[sl, j].tolist() for j in range(3)),
                d.pitch[sl].tolist(),
                d.roll[sl].tolist(),
                d.odba[sl].tolist(),
                d.vedba[sl].tolist(),
            )
        )
        err = np.abs(got - want) / np.maximum(np.abs(want), 1e-300)
        err[(got == want)] = 0.0
        worst = max(worst, float(err.max()))
    verdict(1, "41 features match the brute-force oracle on 1000 windows", worst <= 1e-9, f"max rel err {worst:.2e}")


# 2 ------------------------------------------------------------------------------------


def test_criterion_02_exact_decomposition(verdict):
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(50):
        raw = quantize(rng.normal(0, rng.uniform(0.01, 3.0), size=(int(rng.integers(150, 3000)), 3)))
        s, dyn = decompose_static_dynamic(_series(raw))
        worst = max(worst, float(np.max(np.abs(raw - (s + dyn)))))
    const = np.tile([0.37, -0.81, 0.5], (500, 1))
    _, dyn_c = decompose_static_dynamic(_series(const))
    day = generate_animal(SynthProfile(n_animals=1, day_length_s=86400.0, seed=1), 0).series
    t0 = time.perf_counter()
    s, dyn = decompose_static_dynamic(day)
    elapsed = time.perf_counter() - t0
    worst = max(worst, float(np.max(np.abs(day.xyz - (s + dyn)))))
    ok = worst == 0.0 and not dyn_c.any() and elapsed < 1.0
    verdict(2, "raw == static + dynamic exactly, constant input has zero dynamic", ok, f"max err {worst}, 1-day stream {elapsed:.2f} s")


# 3 ------------------------------------------------------------------------------------

MAG_FEATURES = [i for i, n in enumerate(FEATURE_NAMES) if n.endswith("_magnitude")]


def test_criterion_03_rotation_invariance(verdict):
    rng = np.random.default_rng(103)
    raw = rng.normal(0, 0.4, size=(600, 3)) + [0.1, 0.2, 0.95]
    starts = np.arange(0, 600 - 225 + 1, 75)
    base = extract_feature_matrix(compute_derived_series(_series(raw)), starts, 225)[:, MAG_FEATURES]
    worst = 0.0
    for _ in range(100):
        q, r = np.linalg.qr(rng.normal(size=(3, 3)))
        q = q * np.sign(np.diag(r))
        rot = extract_feature_matrix(compute_derived_series(_series(raw @ q.T)), starts, 225)[:, MAG_FEATURES]
        worst = max(worst, float(np.max(np.abs(rot - base) / np.maximum(np.abs(base), 1e-12))))
    verdict(3, "magnitude features unchanged by 100 random rotations", worst <= 1e-9, f"max rel change {worst:.2e}")


# 4 ------------------------------------------------------------------------------------


def test_criterion_04_window_protocol(verdict):
    rate = 25
    rng = np.random.default_rng(104)
    lengths = [int(v) for v in rng.integers(10, 1200, size=60)]  # samples, alternating states
    n = sum(lengths)
    d = compute_derived_series(_series(np.tile([0.0, 0.0, 1.0], (n, 1))))
    segs, pos = [], 0
    for i, L in enumerate(lengths):
        segs.append(LabeledSegment("acc", "s1", pos, pos + L, StateLabel.INACTIVE if i % 2 == 0 else StateLabel.ACTIVE))
        pos += L
    label = np.repeat([i % 2 for i in range(len(lengths))], lengths)
    ok, details = True, []
    for size in (1, 3, 5, 7, 9):
        m = size * rate
        wins = segment_windows(d, segs, size)
        expect = oracles.tiling_count(lengths, m)
        mixed = [k * m for k in range(n // m) if len(set(label[k * m : (k + 1) * m])) > 1]
        kept = {w.start for w in wins}
        ok &= len(wins) == expect and not kept.intersection(mixed)
        ok &= all(w.start % m == 0 for w in wins)
        details.append(f"{size}s:{len(wins)}/{expect}")
    verdict(4, "window counts equal hand tiling counts, mixed windows absent", ok, " ".join(details))


# 5 ------------------------------------------------------------------------------------


def _separable(n=200, seed=105):
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    x0 = np.where(y == 1, rng.uniform(0.5, 3.0, n), rng.uniform(-3.0, -0.5, n))
    return np.column_stack([x0, rng.normal(size=n)]), y


def test_criterion_05_learner_sanity(verdict):
    X, y = _separable()
    f1 = {}
    for kind, params, cut in (
        (ClassifierKind.RF, RfParams(100, 4, 2, 4), 0.5),
        (ClassifierKind.GB, GbParams(100, 0.1, 2), 0.5),
        (ClassifierKind.SVM, SvmParams(1.0, "linear", 0.1), 0.0),
    ):
        m = fit_classifier(kind, X, y, params, 5)
        f1[kind.value] = confusion_and_metrics(y, predict_scores(m, X) >= cut).f1
    gb = fit_boosting(X, y, GbParams(100, 0.1, 2), 5)
    loss_ok = bool(np.all(np.diff(gb.train_loss) <= 1e-12))
    Z = standardize_fit(X).apply(X)
    _, alpha = fit_svm_model(Z, y, SvmParams(1.0, "linear", 0.1))
    sign = np.where(y == 1, 1.0, -1.0)
    box = bool(np.all((alpha >= 0) & (alpha <= 1.0)))
    eq = abs(float(alpha @ sign))
    ok = all(v == 1.0 for v in f1.values()) and loss_ok and box and eq <= 1e-6
    verdict(5, "RF/GB/SVM separate the toy set; GB loss monotone; SVM duals feasible", ok, f"f1={f1}, |sum a y|={eq:.1e}")


# 6 ------------------------------------------------------------------------------------


def test_criterion_06_threshold_oracle(verdict):
    rng = np.random.default_rng(106)
    mismatches = 0
    for _ in range(200):
        n = int(rng.integers(10, 300))
        s = np.round(rng.random(n), int(rng.integers(1, 4)))
        y = rng.random(n) < rng.uniform(0.2, 0.8)
        if y.all() or not y.any():
            y[0] = not y[0]
        thr = gmean_threshold(roc_curve(s, y))
        g = gmean(float(np.mean(s[y] >= thr)), float(np.mean(s[~y] >= thr)))
        mismatches += g != oracles.best_gmean_by_scan(s.tolist(), y.tolist())
    verdict(6, "G-mean threshold equals the exhaustive scan on 200 random sets", mismatches == 0, f"{mismatches} mismatches")


# 7 ------------------------------------------------------------------------------------


def test_criterion_07_metric_identities(verdict):
    rng = np.random.default_rng(107)
    worst = 0.0
    for _ in range(500):
        n = int(rng.integers(1, 200))
        m = confusion_and_metrics(rng.random(n) < 0.7, rng.random(n) < 0.6)
        cm = m.confusion
        p = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp else 0.0
        r = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        a = (cm.tp + cm.tn) / cm.total
        worst = max(worst, abs(p - m.precision), abs(r - m.recall), abs(f - m.f1), abs(a - m.accuracy))
    active_view = metrics_from_confusion(ConfusionMatrix(tp=11, fp=8, tn=0, fn=0)).precision
    ok = worst <= 1e-12 and round(active_view, 3) == 0.579
    verdict(7, "metrics recompute from confusion cells; 11/(11+8) = 0.579", ok, f"max diff {worst:.1e}, precision {active_view:.4f}")


# 8 ------------------------------------------------------------------------------------


TINY_RF = GridSpec(ClassifierKind.RF, {"n_estimators": (20,), "max_depth": (4,), "min_samples_split": (2,), "min_samples_leaf": (4,)})


def test_criterion_08_no_leakage(verdict, small_dataset):
    report = outer_loaocv(small_dataset, "rf", TINY_RF, k_features=5, seed=8)
    ok = len(report.folds) == len(small_dataset.animals)
    test_rows_before_threshold = 0
    for f in report.folds:
        train_animals = set(small_dataset.subset(small_dataset.animal_ids != f.animal_id).animal_ids.tolist())
        ok &= f.animal_id not in train_animals
        ok &= f.n_train + f.n_test == len(small_dataset)
        roles = [r for r, _ in f.events]
        cut = roles.index("threshold_fixed")
        test_rows_before_threshold += sum(n for r, n in f.events[:cut] if r == "test")
        ok &= roles[cut + 1 :] == ["test"] and f.events[-1][1] == f.n_test
    ok &= test_rows_before_threshold == 0
    verdict(8, "held-out animal never trains; test rows scored once after the threshold", ok, f"test rows before threshold: {test_rows_before_threshold}")


# 9 ------------------------------------------------------------------------------------


def test_criterion_09_determinism_across_workers(verdict, tmp_path):
    cohort = tmp_path / "cohort"
    assert dispatch(["synth", "--out", str(cohort), "--n-animals", "6", "--seed", "9", "--no-drifted"]) == 0
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"manifest": str(cohort / "manifest.json"), "grid_preset": "ci", "seed": 9}))
    assert dispatch(["evaluate", "--config", str(cfg), "--workers", "1", "--out", str(tmp_path / "w1")]) == 0
    assert dispatch(["evaluate", "--config", str(cfg), "--workers", "3", "--out", str(tmp_path / "w3")]) == 0
    a = (tmp_path / "w1" / "report.json").read_bytes()
    b = (tmp_path / "w3" / "report.json").read_bytes()
    verdict(9, "evaluate with 1 and 3 workers writes byte-identical JSON", a == b, f"{len(json.loads(a)['folds'])} folds, {len(a)} bytes")


# 10 -----------------------------------------------------------------------------------


def test_criterion_10_synthetic_reproduction(verdict):
    lines, ok = [], True
    for seed in range(5):
        data = cohort_dataset(cohort_recordings(SynthProfile(seed=seed)), 9)
        t0 = time.perf_counter()
        report = outer_loaocv(data, "rf", GridSpec.ci("rf"), k_features=5, seed=seed)
        elapsed = time.perf_counter() - t0
        med = report.summary["metrics"]
        mv_counts = [sum(n in MV_FEATURES for n in f.feature_names) for f in report.folds]
        ok &= len(report.folds) == 16
        ok &= med["f1"]["median"] >= 0.95 and med["precision"]["median"] >= 0.95
        ok &= min(mv_counts) >= 3
        ok &= elapsed < 90.0
        lines.append(
            f"seed {seed}: n={len(data)} F1 {med['f1']['median']:.3f} P {med['precision']['median']:.3f}"
            f" min MV in top5 {min(mv_counts)} {elapsed:.0f}s"
        )
    verdict("10a", "synthetic cohort: median F1 and precision >= 0.95, >= 3 MV in top 5, CI grid < 90 s", ok, "; ".join(lines))


def test_criterion_10_full_grid_runtime(verdict, default_dataset):
    t0 = time.perf_counter()
    report = outer_loaocv(default_dataset, "rf", GridSpec.paper("rf"), k_features=5, seed=0)
    elapsed = time.perf_counter() - t0
    med = report.summary["metrics"]
    ok = elapsed < 600.0 and med["f1"]["median"] >= 0.95 and med["precision"]["median"] >= 0.95
    detail = f"{len(default_dataset)} windows, 32 cells, {elapsed:.0f} s, F1 {med['f1']['median']:.3f}"
    verdict("10b", "full RF grid nested CV on the default cohort < 10 min", ok, detail)


# 11 -----------------------------------------------------------------------------------


def test_criterion_11_drift_recovery(verdict):
    animal = generate_animal(SynthProfile(n_animals=1, day_length_s=900.0, seed=11), 0)
    base = estimate_drift_offset(animal.series, animal.events)
    errs = {}
    for d in (-2.0, -0.5, 0.5, 2.0):
        est = estimate_drift_offset(apply_clock_offset(animal.series, d), animal.events)
        errs[d] = est - d
    ok = abs(base) <= 0.08 and all(abs(e) <= 0.08 for e in errs.values())
    verdict(11, "injected clock offsets recovered within 0.08 s", ok, ", ".join(f"{d:+}: {e:+.2f}" for d, e in errs.items()))


# 12 -----------------------------------------------------------------------------------


def test_criterion_12_spectral_entropy_bounds(verdict):
    m, bins = 225, 112
    noise = np.mean([spectral_entropy(np.random.default_rng(s).normal(size=m)) for s in range(100)])
    k = np.arange(m)
    tone = spectral_entropy(np.sin(2 * np.pi * 10 * k / m))
    ok = noise >= 0.9 * math.log(bins) and tone <= 0.2 * math.log(bins)
    verdict(12, "white noise >= 0.9 ln(bins) on average, bin-centred tone <= 0.2 ln(bins)", ok, f"noise {noise:.3f}, tone {tone:.2e}, ln(bins) {math.log(bins):.3f}")
