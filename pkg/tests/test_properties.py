from __future__ import annotations

import dataclasses
import io
import math

import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from accelstate.dsp import compute_derived_series, decompose_static_dynamic, segment_windows
from accelstate.evaluation import confusion_and_metrics, gmean, gmean_threshold, roc_curve
from accelstate.features import FEATURE_NAMES, extract_feature_matrix, window_statistics
from accelstate.inference import ActivityTimeline, aggregate_daily_pattern
from accelstate.ingest import format_accel_csv, parse_accel_csv
from accelstate.learn import RfParams, fit_random_forest, gini_importance, SvmParams, fit_svm_model
from accelstate.series import LabeledSegment, StateLabel, TriaxialSeries
from accelstate.synth import QUANTUM_G

import oracles

FAST = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])

adc_counts = arrays(np.int64, st.tuples(st.integers(150, 300), st.just(3)), elements=st.integers(-32768, 32767))
finite = st.floats(-4.0, 4.0, allow_nan=False, allow_infinity=False)


def _series(xyz, rate=25.0):
    return TriaxialSeries.from_arrays(np.arange(len(xyz)) / rate, np.asarray(xyz, dtype=float), "p", rate)


# --- dsp -------------------------------------------------------------------------


@FAST
@given(adc_counts)
def test_decomposition_is_exact_on_the_adc_grid(counts):
    raw = counts * QUANTUM_G
    static, dynamic = decompose_static_dynamic(_series(raw))
    assert np.array_equal(static + dynamic, raw)


@FAST
@given(arrays(np.float64, st.tuples(st.integers(150, 250), st.just(3)), elements=finite))
def test_decomposition_residual_within_one_ulp_for_any_floats(raw):
    static, dynamic = decompose_static_dynamic(_series(raw))
    err = np.abs(raw - (static + dynamic))
    assert np.all(err <= np.spacing(np.maximum(np.abs(raw), np.abs(static))))


@FAST
@given(arrays(np.float64, st.tuples(st.integers(150, 250), st.just(3)), elements=finite), st.integers(0, 2**32 - 1))
def test_magnitude_is_rotation_invariant(raw, seed):
    q, _ = np.linalg.qr(np.random.default_rng(seed).normal(size=(3, 3)))
    a = compute_derived_series(_series(raw)).magnitude
    b = compute_derived_series(_series(raw @ q.T)).magnitude
    assert np.allclose(a, b, rtol=1e-9, atol=1e-12)


@FAST
@given(adc_counts)
def test_dynamic_norm_inequalities(counts):
    d = compute_derived_series(_series(counts * QUANTUM_G))
    assert np.all(d.vedba <= d.odba * (1 + 1e-12))
    assert np.all(d.odba <= math.sqrt(3) * d.vedba * (1 + 1e-12) + 1e-15)


bouts = st.lists(st.tuples(st.integers(1, 400), st.booleans(), st.booleans()), min_size=1, max_size=25)


def _stream(bout_list, rate=25.0):
    """Segments from (length_samples, inactive, labelled) bouts."""
    n = sum(b[0] for b in bout_list)
    segs, pos = [], 0
    for length, inactive, labelled in bout_list:
        if labelled:
            segs.append(LabeledSegment("p", "s", pos, pos + length, StateLabel.INACTIVE if inactive else StateLabel.ACTIVE))
        pos += length
    n = max(n, 150)
    d = compute_derived_series(_series(np.tile([0.0, 0.0, 1.0], (n, 1)), rate))
    return d, segs


@FAST
@given(bouts)
def test_kept_windows_are_pure_disjoint_and_labelled(bout_list):
    d, segs = _stream(bout_list)
    state = np.full(len(d.magnitude), None, dtype=object)
    for s in segs:
        state[s.start : s.stop] = s.state
    for size in (1, 3, 5, 7, 9):
        wins = segment_windows(d, segs, size)
        starts = [w.start for w in wins]
        assert starts == sorted(starts)
        for w1, w2 in zip(wins, wins[1:]):
            assert w1.stop <= w2.start
        for w in wins:
            assert w.stop - w.start == size * 25
            assert all(s is w.state for s in state[w.start : w.stop])


@FAST
@given(bouts)
def test_window_count_non_increasing_for_nested_sizes(bout_list):
    d, segs = _stream(bout_list)
    count = {s: len(segment_windows(d, segs, s)) for s in (1, 3, 9)}
    assert count[1] >= count[3] >= count[9]
    assert count[1] >= len(segment_windows(d, segs, 5))
    assert count[1] >= len(segment_windows(d, segs, 7))


# --- features ------------------------------------------------------------------------


@FAST
@given(arrays(np.float64, st.integers(1, 60), elements=finite))
def test_order_statistics(values):
    mean, med, sd, lo, hi, rng_, skew, kurt = window_statistics(values)
    assert lo <= med <= hi and rng_ == hi - lo and sd >= 0
    want = oracles.moments(list(values))
    np.testing.assert_allclose([mean, med, sd, lo, hi, rng_, skew, kurt], want, rtol=1e-9, atol=1e-9)


@FAST
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10.0), st.floats(0.01, 1.0))
def test_feature_scaling(seed, c, noise):
    # gravity plus motion, the regime the sensor actually records
    rng = np.random.default_rng(seed)
    g = rng.normal(size=3)
    raw = g / np.linalg.norm(g) + noise * rng.normal(size=(300, 3))
    f1 = extract_feature_matrix(compute_derived_series(_series(raw)), [40], 225)[0]
    f2 = extract_feature_matrix(compute_derived_series(_series(raw * c)), [40], 225)[0]
    for name, a, b in zip(FEATURE_NAMES, f1, f2):
        if name in ("range_pitch", "range_roll"):
            # angles are scale-free; the static component is snapped to a 2**-40 g grid,
            # so allow an absolute slack of a few grid steps in radians
            assert abs(a - b) <= 1e-10, name
        elif name.startswith(("skew_", "kurt_")) or name == "spectral_entropy_magnitude":
            assert math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12), name
        else:
            assert math.isclose(b, c * a, rel_tol=1e-9, abs_tol=1e-12), name
    assert np.all(np.isfinite(f1))


@FAST
@given(st.integers(0, 2**32 - 1))
def test_features_depend_only_on_window_samples(seed):
    rng = np.random.default_rng(seed)
    d = compute_derived_series(_series(rng.normal(size=(400, 3))))
    base = extract_feature_matrix(d, [100], 75)[0]
    outside = np.r_[0:100, 175:400]

    def scramble(a):
        a = a.copy()
        a[outside] = rng.normal(size=(len(outside),) + a.shape[1:])
        return a

    src = d.source
    other = dataclasses.replace(
        d,
        source=TriaxialSeries.from_arrays(src.t, scramble(src.xyz), "p", src.sample_rate_hz),
        **{k: scramble(getattr(d, k)) for k in ("static", "dynamic", "magnitude", "pitch", "roll", "vedba", "odba")},
    )
    assert np.array_equal(extract_feature_matrix(other, [100], 75)[0], base)


# --- learn ----------------------------------------------------------------------------


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_gini_importances_are_a_distribution(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(60, 6))
    y = (X[:, 0] + rng.normal(size=60) > 0).astype(int)
    assume(0 < y.sum() < 60)
    imp = gini_importance(fit_random_forest(X, y, RfParams(10, None, 2, 1), seed))
    assert np.all(imp >= 0) and abs(imp.sum() - 1.0) <= 1e-9


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["linear", "rbf"]), st.sampled_from([1.0, 3.0]))
def test_svm_dual_constraints(seed, kernel, C):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(40, 3))
    y = (X[:, 0] + 0.5 * rng.normal(size=40) > 0).astype(int)
    assume(2 < y.sum() < 38)
    model, alpha = fit_svm_model(X, y, SvmParams(C, kernel, 0.4), record_every=1)
    sign = np.where(y == 1, 1.0, -1.0)
    assert np.all((alpha >= 0) & (alpha <= C))
    assert abs(np.dot(alpha, sign)) <= 1e-6
    assert np.all(np.diff(model.objective_trace) >= -1e-9)


# --- eval ------------------------------------------------------------------------------


scores_labels = st.integers(2, 80).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(0, 20).map(lambda v: v / 20), min_size=n, max_size=n),
        st.lists(st.booleans(), min_size=n, max_size=n),
    )
)


@settings(max_examples=200, deadline=None)
@given(scores_labels)
def test_gmean_threshold_is_brute_force_best(sl):
    s, y = sl
    assume(any(y) and not all(y))
    s, y = np.array(s), np.array(y)
    thr = gmean_threshold(roc_curve(s, y))
    g = gmean(np.mean(s[y] >= thr), np.mean(s[~y] >= thr))
    assert g == oracles.best_gmean_by_scan(list(s), list(y))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=60))
def test_metric_identities(pairs):
    yt, yp = zip(*pairs)
    m = confusion_and_metrics(list(yt), list(yp))
    cm = m.confusion
    assert cm.tp + cm.fp + cm.tn + cm.fn == len(pairs)
    assert round(m.accuracy * cm.total) == cm.tp + cm.tn
    assert m.accuracy == (cm.tp + cm.tn) / cm.total
    if m.precision > 0 and m.recall > 0:
        assert abs(m.f1 - 2 * m.precision * m.recall / (m.precision + m.recall)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=50), st.floats(0, 1), st.floats(0, 1))
def test_raising_threshold_never_adds_inactive(scores, t1, t2):
    lo, hi = sorted((t1, t2))
    s = np.array(scores)
    assert np.sum(s >= hi) <= np.sum(s >= lo)


# --- inference --------------------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.tuples(st.floats(0, 86399), st.floats(0, 1)), min_size=1, max_size=80),
    st.floats(0, 1),
    st.floats(0, 1),
)
def test_per_bin_inactive_counts_fall_as_threshold_rises(entries, t1, t2):
    lo, hi = sorted((t1, t2))
    t, s = map(np.array, zip(*sorted(entries)))
    a = aggregate_daily_pattern(ActivityTimeline("p", 9, lo, t, s))
    b = aggregate_daily_pattern(ActivityTimeline("p", 9, hi, t, s))
    assert np.array_equal(a.total, b.total)
    assert np.all((b.total - b.active) <= (a.total - a.active))


# --- ingest -------------------------------------------------------------------------------


@FAST
@given(arrays(np.float64, st.tuples(st.integers(2, 50), st.just(3)), elements=st.floats(-8, 8)), st.floats(0, 1e6))
def test_accel_csv_round_trip(xyz, t0):
    t = t0 + np.arange(len(xyz)) / 25.0
    assume(np.all(np.diff(t) > 0))
    s = TriaxialSeries.from_arrays(t, xyz, "p", 25.0)
    back = parse_accel_csv(io.StringIO(format_accel_csv(s)), 25.0, animal_id="p")
    assert back.same_samples(s)
