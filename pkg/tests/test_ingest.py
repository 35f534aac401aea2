from __future__ import annotations

import io

import numpy as np
import pytest

from accelstate.errors import (
    InsufficientLabels,
    InvertedInterval,
    MalformedRow,
    NonMonotonicTimestamp,
    OverlappingEvents,
    RateMismatch,
    UnknownBehaviour,
)
from accelstate.ingest import (
    apply_clock_offset,
    estimate_drift_offset,
    format_accel_csv,
    label_samples,
    parse_accel_csv,
    parse_annotations,
)
from accelstate.series import AnnotationEvent, Behaviour, StateLabel, TriaxialSeries, map_behaviour_to_state
from accelstate.synth import SynthProfile, generate_animal


def _csv(rows):
    return ("t,ax,ay,az\n" + "".join(f"{t},{x},{y},{z}\n" for t, x, y, z in rows)).encode()


def test_parse_three_rows():
    s = parse_accel_csv(_csv([(0.0, 0, 0, 1), (0.04, 0, 0, 1), (0.08, 0, 0, 1)]), 25)
    assert len(s) == 3
    assert s.sample(1).t == 0.04


def test_parse_non_monotonic_reports_line():
    with pytest.raises(NonMonotonicTimestamp) as exc:
        parse_accel_csv(_csv([(0.0, 0, 0, 1), (0.04, 0, 0, 1), (0.03, 0, 0, 1)]), 25)
    assert exc.value.line == 3


def test_parse_rate_mismatch_uses_median_gap():
    rows = [(i * 0.05, 0, 0, 1) for i in range(1000)]
    with pytest.raises(RateMismatch) as exc:
        parse_accel_csv(_csv(rows), 25)
    assert exc.value.observed == pytest.approx(20.0)
    assert exc.value.declared == 25


def test_parse_rejects_bad_rows():
    with pytest.raises(MalformedRow):
        parse_accel_csv(b"t,ax,ay,az\n0,0,0\n", 25)
    with pytest.raises(MalformedRow):
        parse_accel_csv(b"t,ax,ay,az\n0,0,x,1\n", 25)
    with pytest.raises(MalformedRow):
        parse_accel_csv(_csv([(0.0, 0, 0, 9.5)]), 25)
    with pytest.raises(MalformedRow):
        parse_accel_csv(b"time,x,y,z\n0,0,0,1\n", 25)


def test_csv_round_trip_is_exact(rng):
    t = np.arange(200) / 25.0 + 1.7e9
    xyz = rng.normal(size=(200, 3))
    s = TriaxialSeries.from_arrays(t, xyz, "a1")
    back = parse_accel_csv(format_accel_csv(s).encode(), 25, animal_id="a1")
    assert back.same_samples(s)


def test_parse_annotations_examples():
    evs = parse_annotations(b"animal_id,sequence_id,start_t,end_t,behaviour\nr1,s1,0,30,lying\n")
    assert len(evs) == 1 and evs[0].behaviour is Behaviour.LYING
    with pytest.raises(OverlappingEvents):
        parse_annotations(b"animal_id,sequence_id,start_t,end_t,behaviour\nr1,s1,0,30,lying\nr1,s1,20,40,eating\n")
    with pytest.raises(UnknownBehaviour):
        parse_annotations(b"animal_id,sequence_id,start_t,end_t,behaviour\nr1,s1,0,30,sleeping\n")
    with pytest.raises(InvertedInterval):
        parse_annotations(b"animal_id,sequence_id,start_t,end_t,behaviour\nr1,s1,30,10,lying\n")


def test_other_animals_may_overlap():
    evs = parse_annotations(b"animal_id,sequence_id,start_t,end_t,behaviour\nr1,s1,0,30,lying\nr2,s1,10,40,eating\n")
    assert len(evs) == 2


@pytest.mark.parametrize(
    "beh,state",
    [
        (Behaviour.LYING, StateLabel.INACTIVE),
        (Behaviour.EATING, StateLabel.INACTIVE),
        (Behaviour.DRINKING, StateLabel.INACTIVE),
        (Behaviour.MOVING, StateLabel.ACTIVE),
        (Behaviour.WALKING, StateLabel.ACTIVE),
        (Behaviour.GROOMING, StateLabel.ACTIVE),
    ],
)
def test_behaviour_state_table(beh, state):
    assert map_behaviour_to_state(beh) is state


def test_behaviour_enum_is_exactly_six():
    assert {b.value for b in Behaviour} == {"lying", "eating", "moving", "grooming", "walking", "drinking"}


def test_clock_offset_examples():
    s = TriaxialSeries.from_arrays([0.0, 0.04], [[0, 0, 1], [0, 0, 1]])
    assert apply_clock_offset(s, 0.0).same_samples(s)
    assert np.array_equal(apply_clock_offset(s, 2.0).t, [2.0, 2.04])
    x = 0.123456789
    assert np.array_equal(apply_clock_offset(apply_clock_offset(s, x), -x).t, s.t)


def _flat_series(seconds=60, rate=25):
    n = seconds * rate
    return TriaxialSeries.from_arrays(np.arange(n) / rate, np.tile([0.0, 0.0, 1.0], (n, 1)), "r1")


def test_label_samples_two_segments():
    s = _flat_series()
    evs = [
        AnnotationEvent("r1", "s1", 0.0, 30.0, Behaviour.LYING),
        AnnotationEvent("r1", "s1", 30.0, 60.0, Behaviour.MOVING),
    ]
    segs = label_samples(s, evs)
    assert [(g.start, g.stop, g.state) for g in segs] == [(0, 750, StateLabel.INACTIVE), (750, 1500, StateLabel.ACTIVE)]


def test_label_samples_merges_same_state_and_skips_empty():
    s = _flat_series()
    evs = [
        AnnotationEvent("r1", "s1", 0.0, 20.0, Behaviour.LYING),
        AnnotationEvent("r1", "s1", 20.0, 40.0, Behaviour.EATING),
        AnnotationEvent("r1", "s1", 100.0, 110.0, Behaviour.MOVING),
    ]
    segs = label_samples(s, evs)
    assert len(segs) == 1 and (segs[0].start, segs[0].stop) == (0, 1000)
    # brute-force per-sample labelling agrees
    for i in range(len(s)):
        inside = any(e.start_t <= s.t[i] < e.end_t for e in evs)
        covered = any(g.start <= i < g.stop for g in segs)
        assert inside == covered


@pytest.fixture(scope="module")
def drift_animal():
    prof = SynthProfile(n_animals=1, day_length_s=900.0, seed=5)
    return generate_animal(prof, 0)


def _shift_events(events, d):
    return [AnnotationEvent(e.animal_id, e.sequence_id, e.start_t + d, e.end_t + d, e.behaviour) for e in events]


def test_drift_aligned_is_zero(drift_animal):
    assert abs(estimate_drift_offset(drift_animal.series, drift_animal.events)) <= 0.04


def test_drift_recovers_annotation_shift(drift_animal):
    est = estimate_drift_offset(drift_animal.series, _shift_events(drift_animal.events, -2.0))
    assert est == pytest.approx(2.0, abs=0.04)


def test_drift_matches_fine_independent_scan(drift_animal):
    """A 0.01 s scan of plain correlation lands within one coarse step."""
    from accelstate.dsp import compute_derived_series

    evs = _shift_events(drift_animal.events, -1.3)
    s = drift_animal.series
    odba = compute_derived_series(s).odba
    t = s.t

    def agreement(off):
        lab = np.full(len(t), np.nan)
        for e in evs:
            m = (t - off >= e.start_t) & (t - off < e.end_t)
            lab[m] = 1.0 if e.state is StateLabel.ACTIVE else 0.0
        ok = ~np.isnan(lab)
        return np.corrcoef(odba[ok], lab[ok])[0, 1]

    offs = np.round(np.arange(0.5, 2.11, 0.01), 2)
    fine = offs[int(np.argmax([agreement(o) for o in offs]))]
    est = estimate_drift_offset(s, evs)
    assert abs(est - fine) <= 0.04 + 1e-9


def test_drift_requires_both_states(drift_animal):
    evs = [AnnotationEvent(e.animal_id, e.sequence_id, e.start_t, e.end_t, Behaviour.LYING) for e in drift_animal.events]
    with pytest.raises(InsufficientLabels):
        estimate_drift_offset(drift_animal.series, evs)


def test_drift_shift_relation(drift_animal):
    s, evs = drift_animal.series, drift_animal.events
    base = estimate_drift_offset(s, evs)
    for d in (-1.2, 0.6, 2.4):
        shifted = estimate_drift_offset(apply_clock_offset(s, d), evs)
        assert abs(shifted - (base + d)) <= 0.04 + 1e-9
