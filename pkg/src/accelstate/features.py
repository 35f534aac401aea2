"""The 41 per-window features and the labeled feature table."""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .dsp import DerivedSeries
from .errors import EmptySlice, SliceTooShort
from .series import LabeledWindow, StateLabel

AXIS_SERIES = ("x", "y", "z", "magnitude")
STATISTICS = ("mean", "median", "std", "min", "max", "range", "skew", "kurt")
RANGE_ONLY_SERIES = ("pitch", "roll", "odba", "vedba")

FEATURE_NAMES: tuple[str, ...] = (
    tuple(f"{stat}_{s}" for s in AXIS_SERIES for stat in STATISTICS)
    + tuple(f"mv_{s}" for s in AXIS_SERIES)
    + ("spectral_entropy_magnitude",)
    + tuple(f"range_{s}" for s in RANGE_ONLY_SERIES)
)
N_FEATURES = len(FEATURE_NAMES)
MV_FEATURES = tuple(f"mv_{s}" for s in AXIS_SERIES)

# Relative spread below which a window counts as constant for skew/kurt.
_FLAT_SIGMA = 1e-12
_MIN_SPECTRAL_POWER = 1e-12


def _flat(sigma: np.ndarray, mean: np.ndarray) -> np.ndarray:
    return sigma <= _FLAT_SIGMA * (1.0 + np.abs(mean))


def window_statistics_batch(a: np.ndarray) -> np.ndarray:
    """Rows of ``a`` -> columns (mean, median, std, min, max, range, skew, kurt).

    Population moments (divide by M). Skew and kurtosis are the 3rd and 4th
    standardized moments and are 0 for constant rows.
    """
    a = np.asarray(a, dtype=np.float64)
    mean = a.mean(axis=1)
    dev = a - mean[:, None]
    var = np.mean(dev * dev, axis=1)
    std = np.sqrt(var)
    flat = _flat(std, mean)
    safe = np.where(flat, 1.0, std)
    z = dev / safe[:, None]
    z2 = z * z
    skew = np.where(flat, 0.0, np.mean(z2 * z, axis=1))
    kurt = np.where(flat, 0.0, np.mean(z2 * z2, axis=1))
    std = np.where(flat, 0.0, std)
    lo = a.min(axis=1)
    hi = a.max(axis=1)
    return np.column_stack([mean, np.median(a, axis=1), std, lo, hi, hi - lo, skew, kurt])


def window_statistics(slice_: Sequence[float]) -> tuple[float, ...]:
    a = np.asarray(slice_, dtype=np.float64)
    if a.size == 0:
        raise EmptySlice("window_statistics needs at least one sample")
    return tuple(float(v) for v in window_statistics_batch(a[None, :])[0])


def motion_variation_batch(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    return np.abs(np.diff(a, axis=1)).sum(axis=1) / a.shape[1]


def motion_variation(slice_: Sequence[float]) -> float:
    """Mean absolute successive difference, normalised by the window length M."""
    a = np.asarray(slice_, dtype=np.float64)
    if a.size < 2:
        raise SliceTooShort("motion_variation needs at least two samples")
    return float(motion_variation_batch(a[None, :])[0])


def spectral_entropy_batch(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    m = a.shape[1]
    centred = a - a.mean(axis=1, keepdims=True)
    power = np.abs(np.fft.rfft(centred, axis=1)[:, 1 : m // 2 + 1]) ** 2
    total = power.sum(axis=1)
    dead = total < _MIN_SPECTRAL_POWER
    p = power / np.where(dead, 1.0, total)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p), 0.0)
    return np.where(dead, 0.0, -terms.sum(axis=1))


def spectral_entropy(magnitude_slice: Sequence[float]) -> float:
    """Shannon entropy (nats) of the normalised power spectrum.

    The mean is removed first and the DC bin is excluded; bins 1..M//2 are
    used. Returns 0 when the remaining power is below 1e-12.
    """
    a = np.asarray(magnitude_slice, dtype=np.float64)
    if a.size < 4:
        raise SliceTooShort("spectral_entropy needs at least four samples")
    return float(spectral_entropy_batch(a[None, :])[0])


def _series_matrix(values: np.ndarray, starts: np.ndarray, m: int) -> np.ndarray:
    return values[starts[:, None] + np.arange(m)[None, :]]


def extract_feature_matrix(derived: DerivedSeries, starts: Sequence[int], m: int) -> np.ndarray:
    """Feature rows for equal-length windows ``[start, start + m)``."""
    starts = np.asarray(starts, dtype=np.int64)
    if starts.size == 0:
        return np.empty((0, N_FEATURES))
    if starts.min() < 0 or starts.max() + m > len(derived):
        raise IndexError("window extends past the derived series")
    raw = derived.source.xyz
    series = {
        "x": raw[:, 0],
        "y": raw[:, 1],
        "z": raw[:, 2],
        "magnitude": derived.magnitude,
    }
    blocks = []
    mats = {s: _series_matrix(v, starts, m) for s, v in series.items()}
    for s in AXIS_SERIES:
        blocks.append(window_statistics_batch(mats[s]))
    if m >= 2:
        blocks.append(np.column_stack([motion_variation_batch(mats[s]) for s in AXIS_SERIES]))
    else:
        blocks.append(np.zeros((len(starts), len(AXIS_SERIES))))
    blocks.append(spectral_entropy_batch(mats["magnitude"])[:, None] if m >= 4 else np.zeros((len(starts), 1)))
    ranges = []
    for s in RANGE_ONLY_SERIES:
        w = _series_matrix(getattr(derived, s), starts, m)
        ranges.append(w.max(axis=1) - w.min(axis=1))
    blocks.append(np.column_stack(ranges))
    return np.hstack(blocks)


def extract_features(window: LabeledWindow, derived: DerivedSeries) -> np.ndarray:
    return extract_feature_matrix(derived, [window.start], window.n_samples)[0]


@dataclass
class LabeledDataset:
    """Feature rows with labels and provenance, one row per window."""

    X: np.ndarray
    y: np.ndarray  # 1 = Inactive (positive), 0 = Active
    animal_ids: np.ndarray
    sequence_ids: np.ndarray
    window_start_t: np.ndarray
    window_size_s: int
    feature_names: tuple[str, ...] = field(default=FEATURE_NAMES)

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=np.float64).reshape(-1, len(self.feature_names))
        self.y = np.asarray(self.y, dtype=np.int64)
        self.animal_ids = np.asarray(self.animal_ids, dtype=object)
        self.sequence_ids = np.asarray(self.sequence_ids, dtype=object)
        self.window_start_t = np.asarray(self.window_start_t, dtype=np.float64)
        n = len(self.X)
        if not (len(self.y) == len(self.animal_ids) == len(self.sequence_ids) == len(self.window_start_t) == n):
            raise ValueError("dataset columns have different lengths")

    def __len__(self) -> int:
        return len(self.X)

    @property
    def animals(self) -> list[str]:
        return sorted(set(self.animal_ids.tolist()))

    def subset(self, mask: np.ndarray) -> LabeledDataset:
        return LabeledDataset(
            self.X[mask],
            self.y[mask],
            self.animal_ids[mask],
            self.sequence_ids[mask],
            self.window_start_t[mask],
            self.window_size_s,
            self.feature_names,
        )

    @classmethod
    def concatenate(cls, parts: Sequence[LabeledDataset]) -> LabeledDataset:
        if not parts:
            raise ValueError("nothing to concatenate")
        return cls(
            np.vstack([p.X for p in parts]),
            np.concatenate([p.y for p in parts]),
            np.concatenate([p.animal_ids for p in parts]),
            np.concatenate([p.sequence_ids for p in parts]),
            np.concatenate([p.window_start_t for p in parts]),
            parts[0].window_size_s,
            parts[0].feature_names,
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(self.feature_names) + ["state", "animal_id", "sequence_id", "window_start_t"])
        for i in range(len(self)):
            state = StateLabel.INACTIVE.value if self.y[i] == 1 else StateLabel.ACTIVE.value
            w.writerow(
                [repr(float(v)) for v in self.X[i]]
                + [state, self.animal_ids[i], self.sequence_ids[i], repr(float(self.window_start_t[i]))]
            )
        return buf.getvalue()

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def read_csv(cls, path: str | os.PathLike, window_size_s: int) -> LabeledDataset:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            names = tuple(header[:-4])
            rows = list(reader)
        X = np.array([[float(v) for v in r[: len(names)]] for r in rows]).reshape(-1, len(names))
        y = np.array([1 if r[len(names)] == StateLabel.INACTIVE.value else 0 for r in rows])
        return cls(
            X,
            y,
            [r[len(names) + 1] for r in rows],
            [r[len(names) + 2] for r in rows],
            [float(r[len(names) + 3]) for r in rows],
            window_size_s,
            names,
        )


def build_dataset(derived: DerivedSeries, windows: Iterable[LabeledWindow], window_size_s: int) -> LabeledDataset:
    windows = list(windows)
    m = windows[0].n_samples if windows else 0
    X = extract_feature_matrix(derived, [w.start for w in windows], m) if windows else np.empty((0, N_FEATURES))
    return LabeledDataset(
        X,
        [1 if w.state is StateLabel.INACTIVE else 0 for w in windows],
        [w.animal_id for w in windows],
        [w.sequence_id for w in windows],
        [w.start_t for w in windows],
        window_size_s,
    )
