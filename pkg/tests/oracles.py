"""Independent reference implementations used as test oracles.

Written with plain Python loops and the math module only, so they share no
code paths with the vectorised package implementation.
"""

from __future__ import annotations

import cmath
import math


def moments(a):
    m = len(a)
    mean = sum(a) / m
    var = sum((v - mean) ** 2 for v in a) / m
    sd = math.sqrt(var)
    srt = sorted(a)
    med = srt[m // 2] if m % 2 else 0.5 * (srt[m // 2 - 1] + srt[m // 2])
    if sd <= 1e-12 * (1.0 + abs(mean)):
        skew = kurt = 0.0
    else:
        skew = sum(((v - mean) / sd) ** 3 for v in a) / m
        kurt = sum(((v - mean) / sd) ** 4 for v in a) / m
    return [mean, med, sd, srt[0], srt[-1], srt[-1] - srt[0], skew, kurt]


def motion_variation(a):
    return sum(abs(a[i + 1] - a[i]) for i in range(len(a) - 1)) / len(a)


def spectral_entropy(a):
    m = len(a)
    mean = sum(a) / m
    x = [v - mean for v in a]
    power = []
    for k in range(1, m // 2 + 1):
        s = sum(x[n] * cmath.exp(-2j * math.pi * k * n / m) for n in range(m))
        power.append(abs(s) ** 2)
    total = sum(power)
    if total < 1e-12:
        return 0.0
    h = 0.0
    for p in power:
        q = p / total
        if q > 0:
            h -= q * math.log(q)
    return h


def window_features(ax, ay, az, pitch, roll, odba, vedba):
    """The 41 features of one window from its raw axes and derived series."""
    mag = [math.sqrt(x * x + y * y + z * z) for x, y, z in zip(ax, ay, az)]
    out = []
    for s in (ax, ay, az, mag):
        out.extend(moments(list(s)))
    for s in (ax, ay, az, mag):
        out.append(motion_variation(list(s)))
    out.append(spectral_entropy(mag))
    for s in (pitch, roll, odba, vedba):
        out.append(max(s) - min(s))
    return out


def best_split_1d(x, y):
    """Exhaustive Gini split over midpoints of distinct sorted values."""
    pts = sorted(set(x))
    best = (math.inf, None)
    n = len(x)
    for lo, hi in zip(pts[:-1], pts[1:]):
        thr = 0.5 * (lo + hi)
        left = [yy for xx, yy in zip(x, y) if xx <= thr]
        right = [yy for xx, yy in zip(x, y) if xx > thr]

        def gini(g):
            p = sum(g) / len(g)
            return 1.0 - p * p - (1 - p) * (1 - p)

        crit = (len(left) * gini(left) + len(right) * gini(right)) / n
        if crit < best[0]:
            best = (crit, thr)
    return best[1]


def quantile7(values, q):
    """Hyndman-Fan type 7 quantile by hand."""
    v = sorted(values)
    h = (len(v) - 1) * q
    lo = math.floor(h)
    hi = min(lo + 1, len(v) - 1)
    return v[lo] + (h - lo) * (v[hi] - v[lo])


def best_gmean_by_scan(scores, labels):
    """Largest G-mean over every rule ``score >= c`` with c a distinct score or +inf."""
    pos = sum(1 for l in labels if l)
    neg = len(labels) - pos
    best = 0.0
    for c in sorted(set(scores)) + [math.inf]:
        tp = sum(1 for s, l in zip(scores, labels) if l and s >= c)
        fp = sum(1 for s, l in zip(scores, labels) if not l and s >= c)
        g = math.sqrt((tp / pos) * (1.0 - fp / neg))
        best = max(best, g)
    return best


def tiling_count(segment_lengths_samples, m):
    """Pure windows when alternating bouts (in samples) are tiled from sample 0."""
    bounds = [0]
    for L in segment_lengths_samples:
        bounds.append(bounds[-1] + L)
    total = bounds[-1]
    count = 0
    for k in range(total // m):
        a, b = k * m, (k + 1) * m
        # pure iff no bout boundary strictly inside (a, b)
        if not any(a < e < b for e in bounds[1:-1]):
            count += 1
    return count


