"""CSV ingest, annotation validation, clock-drift handling, sample labeling."""

from __future__ import annotations

import csv
import io
import math
import os
from collections import defaultdict
from dataclasses import replace
from typing import BinaryIO, Iterable, Sequence, Union

import numpy as np

from .dsp import DEFAULT_CUTOFF_HZ, compute_derived_series
from .errors import (
    InsufficientLabels,
    InvertedInterval,
    MalformedRow,
    NonMonotonicTimestamp,
    OverlappingEvents,
    RateMismatch,
    UnknownBehaviour,
)
from .series import (
    DEFAULT_RATE_HZ,
    DEFAULT_SENSITIVITY_G,
    AnnotationEvent,
    Behaviour,
    LabeledSegment,
    StateLabel,
    TriaxialSeries,
)

Source = Union[str, os.PathLike, bytes, BinaryIO]

ACCEL_HEADER = ("t", "ax", "ay", "az")
ANNOTATION_HEADER = ("animal_id", "sequence_id", "start_t", "end_t", "behaviour")
RATE_TOLERANCE = 0.05


def _read_text(source: Source) -> str:
    if isinstance(source, bytes):
        data = source
    elif isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()
    if isinstance(data, str):
        return data.lstrip("\ufeff")
    return data.decode("utf-8-sig")


def _rows(text: str, header: Sequence[str]) -> Iterable[tuple[int, list[str]]]:
    reader = csv.reader(io.StringIO(text))
    try:
        first = next(reader)
    except StopIteration:
        raise MalformedRow(0, "empty file") from None
    if tuple(c.strip() for c in first) != tuple(header):
        raise MalformedRow(0, f"expected header {','.join(header)}")
    for line, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        yield line, row


def _float(cell: str, line: int) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise MalformedRow(line, f"not a number: {cell!r}") from None
    if not math.isfinite(v):
        raise MalformedRow(line, f"non-finite value {cell!r}")
    return v


def parse_accel_csv(
    source: Source,
    declared_rate_hz: float = DEFAULT_RATE_HZ,
    animal_id: str = "",
    sensitivity_g: float = DEFAULT_SENSITIVITY_G,
) -> TriaxialSeries:
    """Parse a ``t,ax,ay,az`` CSV into a validated series.

    Line numbers in errors count data rows from 1 (the header is line 0).
    The sample rate check compares the median inter-sample gap against
    ``1 / declared_rate_hz`` with a 5% tolerance.
    """
    text = _read_text(source)
    t: list[float] = []
    axes: list[tuple[float, float, float]] = []
    for line, row in _rows(text, ACCEL_HEADER):
        if len(row) != 4:
            raise MalformedRow(line, f"expected 4 fields, got {len(row)}")
        ti, x, y, z = (_float(c, line) for c in row)
        if max(abs(x), abs(y), abs(z)) > sensitivity_g:
            raise MalformedRow(line, f"acceleration outside +/-{sensitivity_g} g")
        if t and ti <= t[-1]:
            raise NonMonotonicTimestamp(line)
        t.append(ti)
        axes.append((x, y, z))
    if len(t) >= 2:
        median_gap = float(np.median(np.diff(t)))
        expected = 1.0 / declared_rate_hz
        if abs(median_gap - expected) > RATE_TOLERANCE * expected:
            raise RateMismatch(1.0 / median_gap, declared_rate_hz)
    xyz = np.array(axes, dtype=np.float64).reshape(-1, 3)
    return TriaxialSeries(animal_id, np.array(t), xyz[:, 0], xyz[:, 1], xyz[:, 2], declared_rate_hz, sensitivity_g)


def format_accel_csv(series: TriaxialSeries) -> str:
    lines = [",".join(ACCEL_HEADER)]
    for row in zip(series.t.tolist(), series.ax.tolist(), series.ay.tolist(), series.az.tolist()):
        lines.append(",".join(repr(v) for v in row))
    return "\n".join(lines) + "\n"


def write_accel_csv(series: TriaxialSeries, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_accel_csv(series))


def parse_behaviour(token: str) -> Behaviour:
    try:
        return Behaviour(token.strip().lower())
    except ValueError:
        raise UnknownBehaviour(token) from None


def parse_annotations(source: Source) -> list[AnnotationEvent]:
    text = _read_text(source)
    events: list[AnnotationEvent] = []
    for line, row in _rows(text, ANNOTATION_HEADER):
        if len(row) != 5:
            raise MalformedRow(line, f"expected 5 fields, got {len(row)}")
        animal, seq, start, end, token = row
        start_t, end_t = _float(start, line), _float(end, line)
        if start_t >= end_t:
            raise InvertedInterval(line)
        events.append(AnnotationEvent(animal.strip(), seq.strip(), start_t, end_t, parse_behaviour(token)))
    check_no_overlap(events)
    return events


def check_no_overlap(events: Iterable[AnnotationEvent]) -> None:
    by_animal: dict[str, list[AnnotationEvent]] = defaultdict(list)
    for ev in events:
        by_animal[ev.animal_id].append(ev)
    for animal, evs in by_animal.items():
        evs = sorted(evs, key=lambda e: (e.start_t, e.end_t))
        for prev, cur in zip(evs, evs[1:]):
            if cur.start_t < prev.end_t:
                raise OverlappingEvents(animal, cur.start_t)


def format_annotations(events: Iterable[AnnotationEvent]) -> str:
    lines = [",".join(ANNOTATION_HEADER)]
    for ev in events:
        lines.append(f"{ev.animal_id},{ev.sequence_id},{ev.start_t!r},{ev.end_t!r},{ev.behaviour.value}")
    return "\n".join(lines) + "\n"


def write_annotations(events: Iterable[AnnotationEvent], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_annotations(events))


def apply_clock_offset(series: TriaxialSeries, offset_s: float) -> TriaxialSeries:
    return replace(series, clock_offset_s=series.clock_offset_s + offset_s)


def _events_for(series: TriaxialSeries, events: Iterable[AnnotationEvent]) -> list[AnnotationEvent]:
    evs = [e for e in events if not series.animal_id or e.animal_id == series.animal_id]
    return sorted(evs, key=lambda e: e.start_t)


def _sample_event_index(t: np.ndarray, evs: Sequence[AnnotationEvent]) -> np.ndarray:
    """Index of the event covering each timestamp (half-open), -1 if none."""
    if not evs:
        return np.full(len(t), -1, dtype=np.int64)
    starts = np.array([e.start_t for e in evs])
    ends = np.array([e.end_t for e in evs])
    idx = np.searchsorted(starts, t, side="right") - 1
    ok = idx >= 0
    ok[ok] = t[ok] < ends[idx[ok]]
    return np.where(ok, idx, -1)


def label_samples(series: TriaxialSeries, events: Iterable[AnnotationEvent]) -> list[LabeledSegment]:
    """Join annotations onto sample indices.

    One segment per maximal run of consecutive samples covered by events of
    one state inside one observation sequence. Uncovered samples get no
    segment.
    """
    evs = _events_for(series, events)
    idx = _sample_event_index(series.t, evs)
    n = len(series)
    if n == 0:
        return []
    state_code = np.array([2 if e.state is StateLabel.INACTIVE else 1 for e in evs] + [0], dtype=np.int64)
    seq_names = sorted({e.sequence_id for e in evs})
    seq_code_of = {s: i for i, s in enumerate(seq_names)}
    seq_code = np.array([seq_code_of[e.sequence_id] for e in evs] + [-1], dtype=np.int64)
    st = state_code[idx]
    sq = seq_code[idx]
    change = np.flatnonzero((st[1:] != st[:-1]) | (sq[1:] != sq[:-1])) + 1
    bounds = np.concatenate([[0], change, [n]])
    segments = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        if st[a] == 0:
            continue
        state = StateLabel.INACTIVE if st[a] == 2 else StateLabel.ACTIVE
        segments.append(LabeledSegment(series.animal_id or evs[0].animal_id, seq_names[sq[a]], int(a), int(b), state))
    return segments


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    den = math.sqrt(float(xc @ xc) * float(yc @ yc))
    return float(xc @ yc) / den if den > 0 else float("nan")


def drift_agreement(
    t: np.ndarray, odba: np.ndarray, evs: Sequence[AnnotationEvent], offset_s: float
) -> float:
    """Mean per-sequence point-biserial correlation between ODBA and Active.

    The series clock is assumed to run ``offset_s`` ahead of the annotation
    clock, so sample ``i`` is matched against annotations at ``t[i] - offset_s``.
    Sequences that see only one state at this offset are skipped; NaN if none
    qualify.
    """
    idx = _sample_event_index(t - offset_s, evs)
    covered = idx >= 0
    active = np.array([e.state is StateLabel.ACTIVE for e in evs] + [False])
    names = sorted({e.sequence_id for e in evs})
    code_of = {s: i for i, s in enumerate(names)}
    seq_code = np.array([code_of[e.sequence_id] for e in evs] + [-1])[idx]
    scores = []
    for code in range(len(names)):
        m = covered & (seq_code == code)
        if not m.any():
            continue
        lab = active[idx[m]].astype(np.float64)
        if lab.min() == lab.max():
            continue
        r = _pearson(odba[m], lab)
        if not math.isnan(r):
            scores.append(r)
    return float(np.mean(scores)) if scores else float("nan")


def estimate_drift_offset(
    series: TriaxialSeries,
    events: Iterable[AnnotationEvent],
    search_range_s: float = 5.0,
    step_s: float = 0.04,
    cutoff_hz: float = DEFAULT_CUTOFF_HZ,
) -> float:
    """Estimate how far the series clock runs ahead of the annotation clock.

    Scans offsets ``k * step_s`` within ``+/-search_range_s`` and returns the
    one maximising :func:`drift_agreement`; ties go to the smallest
    ``|offset|``. Correct the series with
    ``apply_clock_offset(series, -estimate)``.
    """
    evs = _events_for(series, events)
    t = series.t
    overlapping = [e for e in evs if e.end_t > t[0] - search_range_s and e.start_t < t[-1] + search_range_s]
    states = {e.state for e in overlapping}
    if states != {StateLabel.ACTIVE, StateLabel.INACTIVE}:
        raise InsufficientLabels("need at least one Active and one Inactive interval overlapping the series")
    # Only samples that can be matched at some offset matter.
    lo = min(e.start_t for e in overlapping) - search_range_s
    hi = max(e.end_t for e in overlapping) + search_range_s
    odba = compute_derived_series(series, cutoff_hz).odba
    keep = (t >= lo) & (t < hi)
    t_k, odba_k = t[keep], odba[keep]

    k_max = int(math.floor(search_range_s / step_s + 1e-9))
    best_off, best_val = 0.0, -math.inf
    for k in sorted(range(-k_max, k_max + 1), key=lambda k: (abs(k), k)):
        off = k * step_s
        val = drift_agreement(t_k, odba_k, overlapping, off)
        if not math.isnan(val) and val > best_val:
            best_off, best_val = off, val
    if best_val == -math.inf:
        raise InsufficientLabels("no offset yields both states inside one sequence")
    return best_off
