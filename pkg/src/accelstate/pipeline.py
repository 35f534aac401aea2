"""Glue from files on disk to labelled feature datasets."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .dsp import DEFAULT_CUTOFF_HZ, compute_derived_series, segment_windows
from .features import LabeledDataset, build_dataset
from .ingest import estimate_drift_offset, label_samples, parse_accel_csv, parse_annotations
from .series import DEFAULT_RATE_HZ, AnnotationEvent, TriaxialSeries


@dataclass
class AnimalRecording:
    series: TriaxialSeries
    events: list[AnnotationEvent]
    offsets: dict[str, float]  # per-sequence shift applied to the annotations


def align_events(
    series: TriaxialSeries, events: Sequence[AnnotationEvent], cutoff_hz: float = DEFAULT_CUTOFF_HZ
) -> tuple[list[AnnotationEvent], dict[str, float]]:
    """Shift each observation sequence's annotations onto the series clock.

    One constant offset per sequence is estimated from ODBA agreement and
    added to that sequence's annotation times.
    """
    by_seq: dict[str, list[AnnotationEvent]] = {}
    for e in events:
        by_seq.setdefault(e.sequence_id, []).append(e)
    out, offsets = [], {}
    for seq in sorted(by_seq):
        evs = by_seq[seq]
        off = estimate_drift_offset(series, evs, cutoff_hz=cutoff_hz)
        offsets[seq] = off
        out.extend(replace(e, start_t=e.start_t + off, end_t=e.end_t + off) for e in evs)
    out.sort(key=lambda e: e.start_t)
    return out, offsets


def load_recording(
    accel_path: str | os.PathLike,
    annotation_path: str | os.PathLike,
    animal_id: str | None = None,
    sample_rate_hz: float = DEFAULT_RATE_HZ,
    correct_drift: bool = False,
    cutoff_hz: float = DEFAULT_CUTOFF_HZ,
) -> AnimalRecording:
    events = parse_annotations(annotation_path)
    if animal_id is None:
        ids = sorted({e.animal_id for e in events})
        if len(ids) != 1:
            raise ValueError(f"{annotation_path}: expected annotations for one animal, found {ids}")
        animal_id = ids[0]
    events = [e for e in events if e.animal_id == animal_id]
    series = parse_accel_csv(accel_path, sample_rate_hz, animal_id=animal_id)
    offsets: dict[str, float] = {}
    if correct_drift:
        events, offsets = align_events(series, events, cutoff_hz)
    return AnimalRecording(series, events, offsets)


def recording_dataset(rec: AnimalRecording, window_size_s: int, cutoff_hz: float = DEFAULT_CUTOFF_HZ) -> LabeledDataset:
    derived = compute_derived_series(rec.series, cutoff_hz)
    windows = segment_windows(derived, label_samples(rec.series, rec.events), window_size_s)
    return build_dataset(derived, windows, window_size_s)


def cohort_dataset(
    recordings: Iterable[AnimalRecording], window_size_s: int, cutoff_hz: float = DEFAULT_CUTOFF_HZ
) -> LabeledDataset:
    return LabeledDataset.concatenate([recording_dataset(r, window_size_s, cutoff_hz) for r in recordings])


def manifest_paths(manifest_path: str | os.PathLike, drifted: bool = False) -> tuple[list[str], list[str]]:
    """Accelerometer and annotation paths listed in a synthetic-cohort manifest."""
    root = os.path.dirname(os.path.abspath(manifest_path))
    with open(manifest_path, encoding="utf-8") as fh:
        doc = json.load(fh)
    key = "accel_drifted" if drifted else "accel"
    accel = [os.path.join(root, a[key]) for a in doc["animals"]]
    ann = [os.path.join(root, a["annotations"]) for a in doc["animals"]]
    return accel, ann
