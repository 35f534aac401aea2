"""Static/dynamic decomposition, derived orientation/energy series, windowing."""

from __future__ import annotations

import io
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import signal

from .errors import SeriesTooShort, WindowSizeError
from .series import LabeledSegment, LabeledWindow, StateLabel, TriaxialSeries

DEFAULT_CUTOFF_HZ = 0.3
FILTER_ORDER = 2
WINDOW_SIZES_S = (1, 3, 5, 7, 9)

# Static components are snapped to this dyadic grid (~9.1e-13 g). For raw
# values on any coarser dyadic grid (ADC counts) raw == static + dynamic holds
# exactly in float64.
_STATIC_GRID = 2.0**-40

DERIVED_COLUMNS = (
    "static_x",
    "static_y",
    "static_z",
    "dynamic_x",
    "dynamic_y",
    "dynamic_z",
    "magnitude",
    "pitch",
    "roll",
    "vedba",
    "odba",
)


@dataclass(frozen=True, eq=False)
class DerivedSeries:
    source: TriaxialSeries
    static: np.ndarray  # (n, 3)
    dynamic: np.ndarray  # (n, 3)
    magnitude: np.ndarray
    pitch: np.ndarray
    roll: np.ndarray
    vedba: np.ndarray
    odba: np.ndarray

    def __len__(self) -> int:
        return len(self.magnitude)

    def column(self, name: str) -> np.ndarray:
        if name.startswith("static_"):
            return self.static[:, "xyz".index(name[-1])]
        if name.startswith("dynamic_"):
            return self.dynamic[:, "xyz".index(name[-1])]
        return getattr(self, name)

    def to_csv(self) -> str:
        """Debug dump with header ``t,static_x,...,odba``."""
        buf = io.StringIO()
        buf.write(",".join(("t",) + DERIVED_COLUMNS) + "\n")
        cols = [self.source.t] + [self.column(c) for c in DERIVED_COLUMNS]
        for row in zip(*cols):
            buf.write(",".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()


def filter_pad_length(n: int, sample_rate_hz: float) -> int:
    return int(min(3 * sample_rate_hz, n - 1))


def lowpass(x: np.ndarray, sample_rate_hz: float, cutoff_hz: float = DEFAULT_CUTOFF_HZ) -> np.ndarray:
    """Zero-phase 2nd-order Butterworth low-pass along axis 0.

    Filtering is done relative to the first sample so a constant input comes
    back bit-exact.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    padlen = filter_pad_length(n, sample_rate_hz)
    if n < 2 or n < 2 * padlen:
        raise SeriesTooShort(f"need at least {int(2 * 3 * sample_rate_hz)} samples, got {n}")
    if not 0 < cutoff_hz < sample_rate_hz / 2:
        raise ValueError(f"cutoff {cutoff_hz} Hz must lie in (0, {sample_rate_hz / 2})")
    b, a = signal.butter(FILTER_ORDER, cutoff_hz, btype="low", fs=sample_rate_hz)
    ref = x[0]
    smooth = signal.filtfilt(b, a, x - ref, axis=0, padtype="even", padlen=padlen)
    smooth = np.round(smooth / _STATIC_GRID) * _STATIC_GRID
    return ref + smooth


def decompose_static_dynamic(
    series: TriaxialSeries, cutoff_hz: float = DEFAULT_CUTOFF_HZ
) -> tuple[np.ndarray, np.ndarray]:
    """Split each axis into gravity (static) and movement (dynamic) parts.

    Returns ``(static, dynamic)`` as ``(n, 3)`` arrays with
    ``dynamic = raw - static`` computed as the elementwise residual.
    """
    raw = series.xyz
    static = lowpass(raw, series.sample_rate_hz, cutoff_hz)
    dynamic = raw - static
    return static, dynamic


def compute_derived_series(series: TriaxialSeries, cutoff_hz: float = DEFAULT_CUTOFF_HZ) -> DerivedSeries:
    static, dynamic = decompose_static_dynamic(series, cutoff_hz)
    raw = series.xyz
    magnitude = np.sqrt(np.sum(raw * raw, axis=1))
    sx, sy, sz = (static[:, i] + 0.0 for i in range(3))  # +0.0 folds -0.0 into 0.0
    # -atan(sx / hypot(sy, sz)) written through atan2 so a vertical x axis stays finite.
    pitch = np.arctan2(-sx, np.hypot(sy, sz)) + 0.0
    roll = np.arctan2(sy, sz)
    roll[roll == -np.pi] = np.pi
    vedba = np.sqrt(np.sum(dynamic * dynamic, axis=1))
    odba = np.sum(np.abs(dynamic), axis=1)
    return DerivedSeries(series, static, dynamic, magnitude, pitch, roll, vedba, odba)


def window_samples(window_size_s: float, sample_rate_hz: float) -> int:
    m = window_size_s * sample_rate_hz
    if abs(m - round(m)) > 1e-9 or round(m) < 1:
        raise WindowSizeError(f"{window_size_s} s at {sample_rate_hz} Hz is not a whole number of samples")
    return int(round(m))


def segment_windows(
    derived: DerivedSeries,
    segments: Iterable[LabeledSegment],
    window_size_s: int,
    allowed_sizes: Sequence[int] | None = WINDOW_SIZES_S,
) -> list[LabeledWindow]:
    """Tile each observation sequence into non-overlapping windows.

    Tiling starts at the first labeled sample of every sequence. A window is
    kept only if all of its samples belong to labeled segments of a single
    state; windows touching unlabeled samples or a state change are dropped.
    """
    if allowed_sizes is not None and window_size_s not in allowed_sizes:
        raise WindowSizeError(f"window size {window_size_s} s not in {tuple(allowed_sizes)}")
    series = derived.source
    m = window_samples(window_size_s, series.sample_rate_hz)
    n = len(series)
    # Per-sample state code (0 unlabeled, 1 active, 2 inactive) per sequence.
    by_seq: dict[str, list[LabeledSegment]] = defaultdict(list)
    for seg in segments:
        by_seq[seg.sequence_id].append(seg)
    t = series.t
    windows: list[LabeledWindow] = []
    for seq_id in sorted(by_seq, key=lambda s: min(g.start for g in by_seq[s])):
        segs = by_seq[seq_id]
        first = min(g.start for g in segs)
        last = max(g.stop for g in segs)
        code = np.zeros(last - first, dtype=np.int8)
        for g in segs:
            if not 0 <= g.start < g.stop <= n:
                raise ValueError(f"segment [{g.start}, {g.stop}) outside series of length {n}")
            code[g.start - first : g.stop - first] = 2 if g.state is StateLabel.INACTIVE else 1
        n_tiles = len(code) // m
        if n_tiles == 0:
            continue
        tiles = code[: n_tiles * m].reshape(n_tiles, m)
        pure = (tiles.min(axis=1) == tiles.max(axis=1)) & (tiles[:, 0] > 0)
        for k in np.flatnonzero(pure):
            start = first + int(k) * m
            state = StateLabel.INACTIVE if tiles[k, 0] == 2 else StateLabel.ACTIVE
            windows.append(
                LabeledWindow(segs[0].animal_id, seq_id, window_size_s, start, m, state, float(t[start]))
            )
    return windows
