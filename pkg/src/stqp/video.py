"""Raw planar 4:2:0 video I/O, color conversion, and synthetic sources.

Files follow the ffmpeg raw layout: planar Y, U, V per frame, 8-bit
samples stored as one byte and 10-bit samples as two bytes little-endian
(yuv420p10le). Readers stream frame by frame and never pull the whole
sequence into memory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

__all__ = [
    "VideoGeometry",
    "Frame",
    "LabFrame",
    "VideoSequence",
    "MovingRect",
    "SynthSpec",
    "MalformedInputError",
    "TruncatedFileError",
    "GeneratorSpecError",
    "read_yuv",
    "write_yuv",
    "synth_video",
    "yuv_to_lab",
    "load_synth_spec",
]


class MalformedInputError(ValueError):
    """Raw input violates the declared geometry (bad sample range etc.)."""


class TruncatedFileError(MalformedInputError):
    """Raw file is shorter than the declared frame count requires."""


class GeneratorSpecError(ValueError):
    """Synthetic-video spec is internally inconsistent."""


@dataclass(frozen=True)
class VideoGeometry:
    """Geometry and sampling metadata for a planar 4:2:0 sequence."""

    width: int
    height: int
    bit_depth: int = 10
    fps: float = 24.0
    num_frames: int = 1
    chroma: str = "420"

    def __post_init__(self):
        if self.width < 16 or self.height < 16 or self.width % 2 or self.height % 2:
            raise ValueError(f"width/height must be even and >= 16, got {self.width}x{self.height}")
        if self.bit_depth not in (8, 10):
            raise ValueError(f"bit_depth must be 8 or 10, got {self.bit_depth}")
        if self.fps <= 0:
            raise ValueError(f"fps must be > 0, got {self.fps}")
        if self.num_frames < 1:
            raise ValueError(f"num_frames must be >= 1, got {self.num_frames}")
        if self.chroma != "420":
            raise ValueError(f"only 4:2:0 is supported, got {self.chroma!r}")

    @property
    def max_sample(self) -> int:
        return (1 << self.bit_depth) - 1

    @property
    def bytes_per_sample(self) -> int:
        return 1 if self.bit_depth == 8 else 2

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(np.uint8) if self.bit_depth == 8 else np.dtype("<u2")

    @property
    def frame_bytes(self) -> int:
        luma = self.width * self.height
        chroma = (self.width // 2) * (self.height // 2)
        return (luma + 2 * chroma) * self.bytes_per_sample


@dataclass(frozen=True)
class Frame:
    """One planar 4:2:0 frame; planes are immutable value objects."""

    y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    index: int

    def __post_init__(self):
        for plane in (self.y, self.u, self.v):
            plane.setflags(write=False)


@dataclass(frozen=True)
class LabFrame:
    """CIELAB planes at luma resolution (L* in [0, 100])."""

    l: np.ndarray
    a: np.ndarray
    b: np.ndarray


@dataclass
class VideoSequence:
    geometry: VideoGeometry
    frames: list[Frame] = field(default_factory=list)


def _plane_shape(geometry: VideoGeometry, plane: str) -> tuple[int, int]:
    if plane == "y":
        return geometry.height, geometry.width
    return geometry.height // 2, geometry.width // 2


def read_yuv(path, geometry: VideoGeometry) -> Iterator[Frame]:
    """Stream frames from a raw planar YUV file.

    The file size must equal num_frames * frame_bytes; a short file raises
    TruncatedFileError naming the first incomplete frame. Samples above
    the bit-depth ceiling raise MalformedInputError naming frame and plane.
    """
    path = Path(path)
    size = path.stat().st_size
    expected = geometry.num_frames * geometry.frame_bytes
    if size != expected:
        if size < expected:
            raise TruncatedFileError(
                f"{path}: expected {expected} bytes for {geometry.num_frames} frames, "
                f"got {size}; truncated at frame {size // geometry.frame_bytes}"
            )
        raise MalformedInputError(
            f"{path}: file is {size} bytes but geometry implies {expected}"
        )

    dtype = geometry.dtype
    with path.open("rb") as fh:
        for index in range(geometry.num_frames):
            planes = {}
            for name in ("y", "u", "v"):
                h, w = _plane_shape(geometry, name)
                raw = fh.read(h * w * geometry.bytes_per_sample)
                data = np.frombuffer(raw, dtype=dtype).reshape(h, w)
                if geometry.bit_depth == 10 and data.max(initial=0) > geometry.max_sample:
                    raise MalformedInputError(
                        f"{path}: sample > {geometry.max_sample} in frame {index} plane {name}"
                    )
                planes[name] = data
            yield Frame(planes["y"], planes["u"], planes["v"], index)


def write_yuv(path, frames: Iterable[Frame], geometry: VideoGeometry) -> None:
    """Write frames as raw planar YUV (inverse of read_yuv)."""
    dtype = geometry.dtype
    with Path(path).open("wb") as fh:
        for frame in frames:
            for name, plane in (("y", frame.y), ("u", frame.u), ("v", frame.v)):
                h, w = _plane_shape(geometry, name)
                if plane.shape != (h, w):
                    raise ValueError(
                        f"frame {frame.index} plane {name}: shape {plane.shape} != {(h, w)}"
                    )
                fh.write(np.ascontiguousarray(plane, dtype=dtype).tobytes())


@dataclass(frozen=True)
class MovingRect:
    """Axis-aligned rectangle translating at a constant per-frame velocity."""

    x: int
    y: int
    w: int
    h: int
    vx: float = 0.0
    vy: float = 0.0
    luma: int = 940
    cb: int | None = None
    cr: int | None = None

    def position(self, frame_index: int) -> tuple[int, int]:
        return (
            int(round(self.x + self.vx * frame_index)),
            int(round(self.y + self.vy * frame_index)),
        )


@dataclass(frozen=True)
class SynthSpec:
    """Deterministic moving-rectangle test sequence description."""

    geometry: VideoGeometry
    rects: tuple[MovingRect, ...] = ()
    background: int = 128
    noise_sigma: float = 0.0
    seed: int = 0


def _neutral_chroma(geometry: VideoGeometry) -> int:
    return 1 << (geometry.bit_depth - 1)


def synth_video(spec: SynthSpec) -> VideoSequence:
    """Render a synthetic sequence; pure in (spec, seed).

    Every rectangle must stay inside the frame for all frames, otherwise
    GeneratorSpecError is raised before any frame is rendered.
    """
    geo = spec.geometry
    for i, rect in enumerate(spec.rects):
        if rect.w <= 0 or rect.h <= 0:
            raise GeneratorSpecError(f"rect {i}: non-positive size {rect.w}x{rect.h}")
        for f in range(geo.num_frames):
            rx, ry = rect.position(f)
            if rx < 0 or ry < 0 or rx + rect.w > geo.width or ry + rect.h > geo.height:
                raise GeneratorSpecError(
                    f"rect {i} leaves the frame at frame {f}: "
                    f"({rx},{ry})+{rect.w}x{rect.h} outside {geo.width}x{geo.height}"
                )

    rng = np.random.default_rng(spec.seed)
    neutral = _neutral_chroma(geo)
    frames = []
    for f in range(geo.num_frames):
        y = np.full((geo.height, geo.width), spec.background, dtype=np.float64)
        u = np.full((geo.height // 2, geo.width // 2), float(neutral))
        v = np.full_like(u, float(neutral))
        for rect in spec.rects:
            rx, ry = rect.position(f)
            y[ry : ry + rect.h, rx : rx + rect.w] = rect.luma
            cb = neutral if rect.cb is None else rect.cb
            cr = neutral if rect.cr is None else rect.cr
            u[ry // 2 : (ry + rect.h) // 2, rx // 2 : (rx + rect.w) // 2] = cb
            v[ry // 2 : (ry + rect.h) // 2, rx // 2 : (rx + rect.w) // 2] = cr
        if spec.noise_sigma > 0:
            y += rng.normal(0.0, spec.noise_sigma, y.shape)
        dtype = geo.dtype
        frames.append(
            Frame(
                np.clip(np.rint(y), 0, geo.max_sample).astype(dtype),
                np.clip(np.rint(u), 0, geo.max_sample).astype(dtype),
                np.clip(np.rint(v), 0, geo.max_sample).astype(dtype),
                f,
            )
        )
    return VideoSequence(geo, frames)


def load_synth_spec(path) -> SynthSpec:
    """Load a generator spec from its JSON document (schema in README)."""
    doc = json.loads(Path(path).read_text())
    geo = VideoGeometry(**doc["geometry"])
    rects = tuple(MovingRect(**r) for r in doc.get("rects", []))
    return SynthSpec(
        geometry=geo,
        rects=rects,
        background=doc.get("background", 128),
        noise_sigma=doc.get("noise_sigma", 0.0),
        seed=doc.get("seed", 0),
    )


# BT.709: Kr=0.2126, Kb=0.0722
_CR_TO_R = 1.5748
_CB_TO_G = 0.1873
_CR_TO_G = 0.4681
_CB_TO_B = 1.8556

_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_D65 = np.array([0.95047, 1.0, 1.08883])


def ycbcr_planes_to_lab(
    y: np.ndarray,
    cb: np.ndarray,
    cr: np.ndarray,
    bit_depth: int,
    full_range: bool = False,
) -> LabFrame:
    """Convert same-resolution YCbCr planes to CIELAB.

    BT.709 matrix, sRGB transfer, D65 white. Limited range by default
    (the HD convention); full_range switches the code-value normalization.
    """
    scale = 1 << (bit_depth - 8)
    y = np.asarray(y, dtype=np.float64)
    cb = np.asarray(cb, dtype=np.float64)
    cr = np.asarray(cr, dtype=np.float64)
    if full_range:
        peak = (1 << bit_depth) - 1
        yn = y / peak
        cbn = (cb - (1 << (bit_depth - 1))) / peak
        crn = (cr - (1 << (bit_depth - 1))) / peak
    else:
        yn = (y - 16 * scale) / (219 * scale)
        cbn = (cb - 128 * scale) / (224 * scale)
        crn = (cr - 128 * scale) / (224 * scale)

    r = yn + _CR_TO_R * crn
    g = yn - _CB_TO_G * cbn - _CR_TO_G * crn
    b = yn + _CB_TO_B * cbn
    rgb = np.clip(np.stack([r, g, b]), 0.0, 1.0)

    linear = np.where(
        rgb > 0.04045, ((rgb + 0.055) / 1.055) ** 2.4, rgb / 12.92
    )
    xyz = np.einsum("ij,jhw->ihw", _SRGB_TO_XYZ, linear) / _D65[:, None, None]

    delta = 6.0 / 29.0
    f = np.where(xyz > delta**3, np.cbrt(xyz), xyz / (3 * delta**2) + 4.0 / 29.0)
    l = 116.0 * f[1] - 16.0
    a = 500.0 * (f[0] - f[1])
    bb = 200.0 * (f[1] - f[2])
    return LabFrame(l, a, bb)


def yuv_to_lab(frame: Frame, geometry: VideoGeometry, full_range: bool = False) -> LabFrame:
    """CIELAB at luma resolution; chroma is nearest-neighbor upsampled."""
    cb = np.repeat(np.repeat(frame.u, 2, axis=0), 2, axis=1)
    cr = np.repeat(np.repeat(frame.v, 2, axis=0), 2, axis=1)
    return ycbcr_planes_to_lab(frame.y, cb, cr, geometry.bit_depth, full_range)
