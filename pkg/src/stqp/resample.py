"""Separable bicubic (Catmull-Rom) resampling for 2D scalar fields.

Semantics are pinned for the whole toolkit: Catmull-Rom kernel (a = -0.5),
edge-clamped taps, pixel-center alignment. The same resampler downscales
frames to the saliency working resolution and shrinks CCR maps onto the
encoder block grid, so both paths share one definition of "cubic".
"""

from __future__ import annotations

import numpy as np

__all__ = ["catmull_rom_kernel", "resize_bicubic"]


def catmull_rom_kernel(t: np.ndarray) -> np.ndarray:
    """Evaluate the Catmull-Rom kernel (a = -0.5) at offsets ``t``."""
    at = np.abs(np.asarray(t, dtype=np.float64))
    out = np.zeros_like(at)
    inner = at <= 1.0
    outer = (at > 1.0) & (at < 2.0)
    ai = at[inner]
    out[inner] = (1.5 * ai - 2.5) * ai * ai + 1.0
    ao = at[outer]
    out[outer] = ((-0.5 * ao + 2.5) * ao - 4.0) * ao + 2.0
    return out


def _axis_taps(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray]:
    """Tap indices and weights for one axis, pixel-center aligned.

    Returns (idx, w) of shape (4, n_out). The last weight is the residual
    1 - sum(others), which makes the four weights sum to exactly 1.0 and
    lets the gather below reproduce constant inputs bit-exactly.
    """
    scale = n_in / n_out
    x = (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5
    i0 = np.floor(x).astype(np.int64)
    t = x - i0

    wm1 = ((-0.5 * t + 1.0) * t - 0.5) * t
    w0 = (1.5 * t - 2.5) * t * t + 1.0
    w1 = ((-1.5 * t + 2.0) * t + 0.5) * t
    w2 = 1.0 - wm1 - w0 - w1

    idx = np.stack([i0 - 1, i0, i0 + 1, i0 + 2])
    np.clip(idx, 0, n_in - 1, out=idx)
    w = np.stack([wm1, w0, w1, w2])
    return idx, w


def _resample_last_axis(values: np.ndarray, n_out: int) -> np.ndarray:
    idx, w = _axis_taps(values.shape[-1], n_out)
    sm1, s0, s1, s2 = (values[..., idx[k]] for k in range(4))
    # Pivot on the w0 tap so a constant row stays exactly constant.
    return s0 + w[0] * (sm1 - s0) + w[2] * (s1 - s0) + w[3] * (s2 - s0)


def resize_bicubic(values: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize a 2D field to (out_h, out_w).

    No antialias prefilter is applied: the output is the plain kernel sum
    over the 4x4 source neighborhood of each output center, matching the
    direct convolution definition used by the test oracle.
    """
    if values.ndim != 2:
        raise ValueError(f"expected a 2D field, got shape {values.shape}")
    if out_h < 1 or out_w < 1:
        raise ValueError(f"output dims must be >= 1, got {out_h}x{out_w}")
    src = np.asarray(values, dtype=np.float64)
    tmp = _resample_last_axis(src, out_w)
    return np.ascontiguousarray(_resample_last_axis(tmp.T, out_h).T)
