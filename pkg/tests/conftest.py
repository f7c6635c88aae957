"""Shared fixtures and frame-building helpers."""

from __future__ import annotations

import numpy as np
import pytest

from stqp.video import Frame, VideoGeometry


def ycbcr_codes(r: float, g: float, b: float, bit_depth: int = 10) -> tuple[int, int, int]:
    """Limited-range BT.709 code values for an R'G'B' triplet in [0, 1]."""
    kr, kb = 0.2126, 0.0722
    y = kr * r + (1 - kr - kb) * g + kb * b
    cb = (b - y) / 1.8556
    cr = (r - y) / 1.5748
    scale = 1 << (bit_depth - 8)
    return (
        int(round((16 + 219 * y) * scale)),
        int(round((128 + 224 * cb) * scale)),
        int(round((128 + 224 * cr) * scale)),
    )


def make_frame(
    width: int,
    height: int,
    rgb_bg=(0.5, 0.5, 0.5),
    patches=(),
    bit_depth: int = 10,
    index: int = 0,
) -> Frame:
    """Frame with colored rectangular patches: (x, y, w, h, (r, g, b))."""
    dtype = np.uint8 if bit_depth == 8 else np.uint16
    yb, ub, vb = ycbcr_codes(*rgb_bg, bit_depth)
    y = np.full((height, width), yb, dtype=dtype)
    u = np.full((height // 2, width // 2), ub, dtype=dtype)
    v = np.full((height // 2, width // 2), vb, dtype=dtype)
    for px, py, pw, ph, rgb in patches:
        yc, uc, vc = ycbcr_codes(*rgb, bit_depth)
        y[py : py + ph, px : px + pw] = yc
        u[py // 2 : (py + ph) // 2, px // 2 : (px + pw) // 2] = uc
        v[py // 2 : (py + ph) // 2, px // 2 : (px + pw) // 2] = vc
    return Frame(y, u, v, index)


def random_frames(rng: np.random.Generator, geometry: VideoGeometry) -> list[Frame]:
    frames = []
    for i in range(geometry.num_frames):
        shape_y = (geometry.height, geometry.width)
        shape_c = (geometry.height // 2, geometry.width // 2)
        hi = geometry.max_sample + 1
        frames.append(
            Frame(
                rng.integers(0, hi, shape_y).astype(geometry.dtype),
                rng.integers(0, hi, shape_c).astype(geometry.dtype),
                rng.integers(0, hi, shape_c).astype(geometry.dtype),
                i,
            )
        )
    return frames


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240811)
