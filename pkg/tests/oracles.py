"""Independent reference implementations the tests check against.

Everything here is deliberately brute force and self-contained: no code
is shared with the package paths under test.
"""

from __future__ import annotations

import statistics

import numpy as np


def cubic_kernel(t: float) -> float:
    """Catmull-Rom (a = -0.5) evaluated the long way."""
    a = -0.5
    t = abs(t)
    if t <= 1.0:
        return (a + 2) * t**3 - (a + 3) * t**2 + 1
    if t < 2.0:
        return a * t**3 - 5 * a * t**2 + 8 * a * t - 4 * a
    return 0.0


def bicubic_resize_oracle(src: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Direct 2D kernel sum over each output center's 4x4 neighborhood,
    edge-clamped, pixel-center aligned."""
    in_h, in_w = src.shape
    out = np.zeros((out_h, out_w))
    for r in range(out_h):
        y = (r + 0.5) * in_h / out_h - 0.5
        j0 = int(np.floor(y))
        for c in range(out_w):
            x = (c + 0.5) * in_w / out_w - 0.5
            i0 = int(np.floor(x))
            acc = 0.0
            for dj in range(-1, 3):
                wy = cubic_kernel(y - (j0 + dj))
                sj = min(max(j0 + dj, 0), in_h - 1)
                for di in range(-1, 3):
                    wx = cubic_kernel(x - (i0 + di))
                    si = min(max(i0 + di, 0), in_w - 1)
                    acc += wy * wx * src[sj, si]
            out[r, c] = acc
    return out


def circular_convolve2d(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Wrap-around spatial convolution, kernel anchored at (0, 0):
    out[n] = sum_m img[m] * kernel[(n - m) mod N]."""
    out = np.zeros_like(img, dtype=np.float64)
    h, w = img.shape
    for ky in range(h):
        for kx in range(w):
            k = kernel[ky, kx]
            if k != 0.0:
                out += k * np.roll(np.roll(img, ky, axis=0), kx, axis=1)
    return out


def exhaustive_match(
    target: int, size_fn, qp_min: int = 0, qp_max: int = 51, min_ratio: float = 0.95
):
    """Scan every QP; feasible argmin of |size - target|, ties toward the
    larger size then the smaller QP. Returns (qp, size) or None."""
    best = None
    for qp in range(qp_min, qp_max + 1):
        size = size_fn(qp)
        if size < min_ratio * target:
            continue
        diff = abs(size - target)
        if best is None or diff < best[0] or (diff == best[0] and size > best[2]):
            best = (diff, qp, size)
    return None if best is None else (best[1], best[2])


def mos_oracle(scores):
    mean = statistics.fmean(scores)
    sd = statistics.stdev(scores) if len(scores) > 1 else 0.0
    return mean, sd


def agreement_oracle(records, observer):
    """records: iterable of (observer, stimulus, score). Leave-one-out
    mu/sigma (sample sd) with inclusive bounds."""
    own = [(stim, score) for obs, stim, score in records if obs == observer]
    hits = 0
    for stim, score in own:
        others = [s for obs, st, s in records if st == stim and obs != observer]
        mu = statistics.fmean(others)
        sigma = statistics.stdev(others) if len(others) > 1 else 0.0
        if mu - sigma <= score <= mu + sigma:
            hits += 1
    return hits / len(own)


def eq1_oracle(pairs):
    """pairs: list of (original score, repeat score)."""
    return sum(abs(a - b) for a, b in pairs) / len(pairs)


def luma_centroid(plane: np.ndarray, threshold: float) -> tuple[float, float]:
    ys, xs = np.nonzero(plane > threshold)
    return float(xs.mean()), float(ys.mean())
