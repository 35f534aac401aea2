"""Apply a trained model to unlabelled streams and summarise daily activity."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dsp import DEFAULT_CUTOFF_HZ, compute_derived_series, filter_pad_length, window_samples
from .errors import BadBinSize, SeriesTooShort, WindowSizeMismatch
from .features import extract_feature_matrix
from .learn.model import TrainedClassifier, predict_scores
from .series import StateLabel, TriaxialSeries

DAY_S = 86400.0
MAX_GAP_PERIODS = 2.0


@dataclass
class ActivityTimeline:
    animal_id: str
    window_size_s: int
    threshold: float
    window_start_t: np.ndarray
    score: np.ndarray

    @property
    def inactive(self) -> np.ndarray:
        return self.score >= self.threshold

    @property
    def states(self) -> list[StateLabel]:
        return [StateLabel.INACTIVE if v else StateLabel.ACTIVE for v in self.inactive]

    def __len__(self) -> int:
        return len(self.score)

    def rethreshold(self, threshold: float) -> ActivityTimeline:
        return ActivityTimeline(self.animal_id, self.window_size_s, threshold, self.window_start_t, self.score)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["window_start_t", "score", "state"])
        for t, s, st in zip(self.window_start_t, self.score, self.states):
            w.writerow([repr(float(t)), repr(float(s)), st.value])
        return buf.getvalue()

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())


def contiguous_runs(t: np.ndarray, sample_rate_hz: float) -> list[tuple[int, int]]:
    """Sample ranges with no gap longer than two sample periods."""
    if len(t) == 0:
        return []
    breaks = np.flatnonzero(np.diff(t) > MAX_GAP_PERIODS / sample_rate_hz) + 1
    bounds = np.concatenate([[0], breaks, [len(t)]])
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]


def _slice(series: TriaxialSeries, a: int, b: int) -> TriaxialSeries:
    return TriaxialSeries(
        series.animal_id,
        series.t_device[a:b],
        series.ax[a:b],
        series.ay[a:b],
        series.az[a:b],
        series.sample_rate_hz,
        series.sensitivity_g,
        series.clock_offset_s,
    )


def run_inference(
    series: TriaxialSeries,
    model: TrainedClassifier,
    window_size_s: int,
    cutoff_hz: float = DEFAULT_CUTOFF_HZ,
) -> ActivityTimeline:
    """Score every full, gap-free window of the stream.

    Each contiguous run is filtered on its own and tiled from its first
    sample; runs too short to filter are skipped.
    """
    if model.window_size_s is not None and int(model.window_size_s) != int(window_size_s):
        raise WindowSizeMismatch(f"model trained on {model.window_size_s} s windows, asked for {window_size_s} s")
    rate = series.sample_rate_hz
    m = window_samples(window_size_s, rate)
    starts_t, rows = [], []
    t = series.t
    for a, b in contiguous_runs(t, rate):
        n = b - a
        n_tiles = n // m
        if n_tiles == 0 or n < 2 * filter_pad_length(n, rate) or n < 2:
            continue
        derived = compute_derived_series(_slice(series, a, b), cutoff_hz)
        starts = np.arange(n_tiles) * m
        rows.append(extract_feature_matrix(derived, starts, m))
        starts_t.append(t[a + starts])
    if not rows:
        raise SeriesTooShort(f"no full {window_size_s} s window in a stream of {len(series)} samples")
    X = np.vstack(rows)
    scores = predict_scores(model, model.select(X))
    return ActivityTimeline(series.animal_id, int(window_size_s), float(model.threshold), np.concatenate(starts_t), scores)


@dataclass
class DailyPattern:
    bin_minutes: int
    active: np.ndarray  # Active windows per bin
    total: np.ndarray  # windows per bin

    @property
    def bin_start_s(self) -> np.ndarray:
        return np.arange(len(self.total)) * self.bin_minutes * 60.0

    @property
    def fractions(self) -> np.ndarray:
        """Active share per bin; NaN where a bin saw no windows."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.total > 0, self.active / np.maximum(self.total, 1), np.nan)


def aggregate_daily_pattern(timeline: ActivityTimeline | Sequence[ActivityTimeline], bin_minutes: int = 60) -> DailyPattern:
    """Fraction of Active windows per clock-time bin, pooling days and animals."""
    if not isinstance(bin_minutes, (int, np.integer)) or bin_minutes <= 0 or 1440 % bin_minutes:
        raise BadBinSize(f"bin size {bin_minutes} min does not divide a day")
    timelines = [timeline] if isinstance(timeline, ActivityTimeline) else list(timeline)
    n_bins = 1440 // bin_minutes
    active = np.zeros(n_bins, dtype=np.int64)
    total = np.zeros(n_bins, dtype=np.int64)
    for tl in timelines:
        clock = np.mod(tl.window_start_t, DAY_S)
        b = np.minimum((clock // (bin_minutes * 60.0)).astype(np.int64), n_bins - 1)
        total += np.bincount(b, minlength=n_bins)
        active += np.bincount(b, weights=(~tl.inactive).astype(np.int64), minlength=n_bins).astype(np.int64)
    return DailyPattern(int(bin_minutes), active, total)


def _hhmm(seconds: float) -> str:
    m = int(round(seconds / 60.0))
    return f"{m // 60:02d}:{m % 60:02d}"


def plot_csv(pattern: DailyPattern) -> str:
    """``bin_start,active_fraction`` rows; missing bins leave the fraction empty."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin_start", "active_fraction"])
    for start, frac in zip(pattern.bin_start_s, pattern.fractions):
        w.writerow([_hhmm(start), "" if math.isnan(frac) else repr(float(frac))])
    return buf.getvalue()


def parse_plot_csv(text: str) -> tuple[list[str], np.ndarray]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["bin_start", "active_fraction"]:
        raise ValueError("not a daily-pattern CSV")
    labels = [r[0] for r in rows[1:]]
    fracs = np.array([float(r[1]) if r[1] else np.nan for r in rows[1:]])
    return labels, fracs


def plot_svg(pattern: DailyPattern, title: str = "Daily activity") -> str:
    """Self-contained SVG line chart of the Active fraction over the day."""
    w, h = 640, 320
    left, right, top, bottom = 60, 20, 30, 50
    pw, ph = w - left - right, h - top - bottom
    n = len(pattern.total)
    width_s = pattern.bin_minutes * 60.0

    def px(sec: float) -> float:
        return left + pw * sec / DAY_S

    def py(frac: float) -> float:
        return top + ph * (1.0 - frac)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">',
        f'<title>{title}</title>',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for hour in range(0, 25, 3):
        x = px(hour * 3600.0)
        parts.append(f'<line x1="{x:.1f}" y1="{top + ph}" x2="{x:.1f}" y2="{top + ph + 4}" stroke="black"/>')
        parts.append(f'<text x="{x:.1f}" y="{top + ph + 16}" text-anchor="middle">{hour:02d}h</text>')
    for k in range(0, 5):
        frac = k / 4
        y = py(frac)
        parts.append(f'<line x1="{left - 4}" y1="{y:.1f}" x2="{left}" y2="{y:.1f}" stroke="black"/>')
        parts.append(f'<text x="{left - 6}" y="{y + 4:.1f}" text-anchor="end">{frac:.2f}</text>')
    parts.append(f'<text x="{left + pw / 2}" y="{h - 10}" text-anchor="middle">Time of day (h)</text>')
    parts.append(
        f'<text x="15" y="{top + ph / 2}" text-anchor="middle" transform="rotate(-90 15 {top + ph / 2})">Active fraction</text>'
    )
    parts.append(f'<text x="{left + pw / 2}" y="18" text-anchor="middle">{title}</text>')
    # one polyline per run of covered bins
    run: list[str] = []
    fr = pattern.fractions
    for i in range(n + 1):
        if i < n and not math.isnan(fr[i]):
            run.append(f"{px(i * width_s + width_s / 2):.1f},{py(fr[i]):.1f}")
            continue
        if run:
            parts.append(f'<polyline points="{" ".join(run)}" fill="none" stroke="#1f77b4" stroke-width="2"/>')
            run = []
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_plot_data(
    pattern: DailyPattern,
    csv_path: str | os.PathLike | None = None,
    svg_path: str | os.PathLike | None = None,
) -> str:
    """Return the plot CSV, optionally writing it and an SVG chart to disk."""
    text = plot_csv(pattern)
    if csv_path is not None:
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    if svg_path is not None:
        with open(svg_path, "w", encoding="utf-8") as fh:
            fh.write(plot_svg(pattern))
    return text
