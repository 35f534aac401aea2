"""Synthetic labelled cohorts with known states and clock drift.

Each animal gets one continuous stream of alternating Inactive/Active bouts.
Inactive bouts hold a posture that rocks slowly (well below the 0.3 Hz
cut-off) with small white noise. Moving and walking add translational bursts
at 2-8 Hz plus broadband noise while the posture wanders; grooming instead
shakes the sensor rotationally, so magnitude stays near 1 g. Values are
snapped to a 2^-12 g grid, as a 16-bit ADC would deliver them.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.signal import lfilter
from scipy.stats import norm

from .ingest import write_accel_csv, write_annotations
from .series import DEFAULT_RATE_HZ, DEFAULT_SENSITIVITY_G, AnnotationEvent, Behaviour, TriaxialSeries

DAY_S = 86400.0
QUANTUM_G = 2.0**-12

# behaviour mix inside each state, weighted by observed hours
INACTIVE_MIX = ((Behaviour.LYING, 5.34), (Behaviour.EATING, 1.75), (Behaviour.DRINKING, 0.34))
ACTIVE_MIX = ((Behaviour.MOVING, 1.68), (Behaviour.GROOMING, 0.67), (Behaviour.WALKING, 0.14))

NIGHT_START_H = 22.0
NIGHT_END_H = 5.0


@dataclass(frozen=True)
class SynthProfile:
    n_animals: int = 16
    day_length_s: float = 1300.0  # stream length per animal
    inactive_fraction: float = 0.86  # target Inactive share of pure 9 s windows
    sigma_q: float = 0.02  # inactive white noise, g
    sigma_a: float = 0.15  # active white noise, g
    burst_freq_hz: tuple[float, float] = (2.0, 8.0)
    burst_amp_g: tuple[float, float] = (0.3, 0.8)
    inactive_median_s: float = 60.0
    bout_sigma: float = 0.7  # log-normal shape of bout lengths
    drift_s_per_day: float = 1.7
    drift_uniform: bool = True  # draw each animal's drift in [-d, d]; else exactly d
    start_clock_s: float = 9 * 3600.0
    nocturnal: bool = False
    sample_rate_hz: float = DEFAULT_RATE_HZ
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.inactive_fraction < 1.0:
            raise ValueError("inactive_fraction must lie in (0, 1)")
        if self.sigma_q <= 0 or self.sigma_a <= 0:
            raise ValueError("noise levels must be positive")
        if abs(self.drift_s_per_day) > 5.0:
            raise ValueError("drift must stay within +/-5 s/day")
        if self.n_animals < 1 or self.day_length_s <= 0:
            raise ValueError("need at least one animal and a positive length")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["burst_freq_hz"] = list(self.burst_freq_hz)
        d["burst_amp_g"] = list(self.burst_amp_g)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> SynthProfile:
        d = dict(d)
        for key in ("burst_freq_hz", "burst_amp_g"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


@dataclass
class SynthAnimal:
    animal_id: str
    series: TriaxialSeries  # true clock
    drifted: TriaxialSeries  # device clock running ahead by drift * elapsed / day
    events: list[AnnotationEvent]
    drift_s_per_day: float
    seed_key: tuple[int, ...]

    @property
    def drift_at_end_s(self) -> float:
        return self.drift_s_per_day * (len(self.series) / self.series.sample_rate_hz) / DAY_S


@dataclass
class SynthCohort:
    profile: SynthProfile
    animals: list[SynthAnimal] = field(default_factory=list)


def _expected_full_tiles(median_s: float, sigma: float, w: float) -> float:
    """E[(L - w)+] for log-normal L; proportional to pure tiles per bout."""
    mu = math.log(median_s)
    d1 = (mu - math.log(w) + sigma * sigma) / sigma
    return math.exp(mu + 0.5 * sigma * sigma) * norm.cdf(d1) - w * norm.cdf(d1 - sigma)


def active_median_for(profile: SynthProfile, window_s: float = 9.0) -> float:
    """Active bout median that yields the target Inactive share of pure windows."""
    inactive = _expected_full_tiles(profile.inactive_median_s, profile.bout_sigma, window_s)
    want = inactive * (1.0 - profile.inactive_fraction) / profile.inactive_fraction

    def gap(m: float) -> float:
        return _expected_full_tiles(m, profile.bout_sigma, window_s) - want

    return brentq(gap, 0.1, 10.0 * profile.inactive_median_s)


def _is_night(clock_s: float) -> bool:
    h = (clock_s % DAY_S) / 3600.0
    return h >= NIGHT_START_H or h < NIGHT_END_H


def _bout_plan(profile: SynthProfile, n: int, rng: np.random.Generator) -> list[tuple[int, int, Behaviour]]:
    """(start, stop, behaviour) sample ranges tiling [0, n)."""
    rate = profile.sample_rate_hz
    med_i = profile.inactive_median_s
    med_a = active_median_for(profile)
    inactive = rng.random() < profile.inactive_fraction
    beh_i = [b for b, _ in INACTIVE_MIX]
    p_i = np.array([h for _, h in INACTIVE_MIX]) / sum(h for _, h in INACTIVE_MIX)
    beh_a = [b for b, _ in ACTIVE_MIX]
    p_a = np.array([h for _, h in ACTIVE_MIX]) / sum(h for _, h in ACTIVE_MIX)
    plan = []
    pos = 0
    while pos < n:
        median = med_i if inactive else med_a
        if profile.nocturnal and _is_night(profile.start_clock_s + pos / rate):
            median = med_i / 6.0 if inactive else med_a * 4.0
        length_s = median * math.exp(profile.bout_sigma * rng.standard_normal())
        length = max(1, int(round(length_s * rate)))
        stop = min(n, pos + length)
        beh = beh_i[rng.choice(3, p=p_i)] if inactive else beh_a[rng.choice(3, p=p_a)]
        plan.append((pos, stop, beh))
        pos = stop
        inactive = not inactive
    return plan


def _gravity(pitch: np.ndarray, roll: np.ndarray) -> np.ndarray:
    cp = np.cos(pitch)
    return np.column_stack([-np.sin(pitch), cp * np.sin(roll), cp * np.cos(roll)])


def _rotate(v: np.ndarray, axis: np.ndarray, angle: np.ndarray) -> np.ndarray:
    """Rodrigues rotation of row vectors ``v`` about unit ``axis``."""
    c = np.cos(angle)[:, None]
    s = np.sin(angle)[:, None]
    cross = np.cross(axis, v)
    dot = (v @ axis)[:, None]
    return v * c + cross * s + axis[None, :] * dot * (1.0 - c)


def _posture_walk(n: int, p0: float, r0: float, rate: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Mean-reverting random walk of (pitch, roll) in radians."""
    dt = 1.0 / rate
    theta = 0.2  # reversion per second
    sd = math.radians(12.0) * math.sqrt(dt)
    steps = rng.standard_normal((n, 2)) * sd
    keep = 1.0 - theta * dt
    zi = np.array([[keep * p0], [keep * r0]])
    out = lfilter([1.0], [1.0, -keep], steps.T, axis=1, zi=zi)[0]
    limit = math.radians(60.0)
    out = np.clip(out, -limit, limit)
    return out[0], out[1]


def _inactive_signal(n, t, p0, r0, profile, rng):
    f = rng.uniform(0.02, 0.15, size=2)
    amp = np.radians(rng.uniform(5.0, 25.0, size=2))
    ph = rng.uniform(0, 2 * np.pi, size=2)
    # rocking starts from the current posture, so the stream stays continuous
    pitch = p0 + amp[0] * (np.sin(2 * np.pi * f[0] * t + ph[0]) - np.sin(ph[0]))
    roll = r0 + amp[1] * (np.sin(2 * np.pi * f[1] * t + ph[1]) - np.sin(ph[1]))
    sway_f = rng.uniform(0.02, 0.15)
    sway = 1.0 + rng.uniform(0.0, 0.05) * np.sin(2 * np.pi * sway_f * t + rng.uniform(0, 2 * np.pi))
    sig = _gravity(pitch, roll) * sway[:, None]
    sig += rng.normal(0.0, profile.sigma_q, size=(n, 3))
    return sig, float(pitch[-1]), float(roll[-1])


def _burst_gate(n: int, rate: float, rng: np.random.Generator) -> np.ndarray:
    gate = np.zeros(n)
    pos = 0
    on = True
    while pos < n:
        dur = rng.uniform(0.5, 2.0) if on else rng.uniform(0.2, 1.0)
        stop = min(n, pos + max(1, int(dur * rate)))
        gate[pos:stop] = 1.0 if on else 0.0
        pos = stop
        on = not on
    return gate


def _active_signal(n, t, p0, r0, beh, profile, rng):
    rate = profile.sample_rate_hz
    pitch, roll = _posture_walk(n, p0, r0, rate, rng)
    g = _gravity(pitch, roll)
    if beh is Behaviour.GROOMING:
        beta = rng.uniform(np.radians(30.0), np.radians(60.0)) * rng.choice([-1.0, 1.0])
        axis = np.array([math.cos(beta), math.sin(beta), 0.0])
        f = rng.uniform(3.0, 8.0)
        amp = np.radians(rng.uniform(10.0, 30.0))
        angle = amp * np.sin(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi)) * _burst_gate(n, rate, rng)
        sig = _rotate(g, axis, angle)
        sig += rng.normal(0.0, profile.sigma_q, size=(n, 3))
    else:
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        f = rng.uniform(*profile.burst_freq_hz)
        amp = rng.uniform(*profile.burst_amp_g)
        osc = amp * np.sin(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi)) * _burst_gate(n, rate, rng)
        sig = g + osc[:, None] * d[None, :]
        sig += rng.normal(0.0, profile.sigma_a, size=(n, 3))
    return sig, float(pitch[-1]), float(roll[-1])


def quantize(x: np.ndarray, sensitivity_g: float = DEFAULT_SENSITIVITY_G) -> np.ndarray:
    return np.clip(np.round(x / QUANTUM_G) * QUANTUM_G, -sensitivity_g, sensitivity_g)


def generate_animal(profile: SynthProfile, index: int) -> SynthAnimal:
    rate = profile.sample_rate_hz
    n = int(round(profile.day_length_s * rate))
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(profile.seed, spawn_key=(index, 0))))
    drift_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(profile.seed, spawn_key=(index, 1))))
    animal_id = f"animal{index + 1:02d}"
    seq_id = f"{animal_id}-s1"
    t = profile.start_clock_s + np.arange(n) / rate

    xyz = np.empty((n, 3))
    p, r = np.radians(rng.uniform(-20.0, 20.0, size=2))
    events = []
    for a, b, beh in _bout_plan(profile, n, rng):
        tb = np.arange(b - a) / rate
        if beh in (Behaviour.LYING, Behaviour.EATING, Behaviour.DRINKING):
            xyz[a:b], p, r = _inactive_signal(b - a, tb, p, r, profile, rng)
        else:
            xyz[a:b], p, r = _active_signal(b - a, tb, p, r, beh, profile, rng)
        events.append(AnnotationEvent(animal_id, seq_id, float(t[a]), profile.start_clock_s + b / rate, beh))
    xyz = quantize(xyz)

    drift = profile.drift_s_per_day * (drift_rng.uniform(-1.0, 1.0) if profile.drift_uniform else 1.0)
    series = TriaxialSeries.from_arrays(t, xyz, animal_id, rate)
    t_dev = t + drift * (t - t[0]) / DAY_S
    drifted = TriaxialSeries.from_arrays(t_dev, xyz, animal_id, rate)
    return SynthAnimal(animal_id, series, drifted, events, float(drift), (profile.seed, index))


def generate_cohort(profile: SynthProfile) -> SynthCohort:
    return SynthCohort(profile, [generate_animal(profile, i) for i in range(profile.n_animals)])


def write_cohort(cohort: SynthCohort, out_dir: str | os.PathLike, drifted: bool = True) -> str:
    """Write accelerometer/annotation CSVs and ``manifest.json``; returns the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for a in cohort.animals:
        accel = f"{a.animal_id}_accel.csv"
        ann = f"{a.animal_id}_annotations.csv"
        write_accel_csv(a.series, os.path.join(out_dir, accel))
        write_annotations(a.events, os.path.join(out_dir, ann))
        entry = {
            "animal_id": a.animal_id,
            "accel": accel,
            "annotations": ann,
            "seed_key": list(a.seed_key),
            "drift_s_per_day": a.drift_s_per_day,
            "drift_at_end_s": a.drift_at_end_s,
        }
        if drifted:
            dpath = f"{a.animal_id}_accel_drifted.csv"
            write_accel_csv(a.drifted, os.path.join(out_dir, dpath))
            entry["accel_drifted"] = dpath
        entries.append(entry)
    manifest = {"profile": cohort.profile.to_dict(), "animals": entries}
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path
