"""Per-frame saliency from simple priors, and its complement (CCR).

The predictor multiplies a log-Gabor frequency prior and a color
(warmth) prior computed on CIELAB planes at a square working resolution;
an optional center-bias Gaussian can be multiplied in, but the default
configuration excludes it so off-center content is not penalized. The
compression-candidate-region map is the elementwise complement of the
normalized saliency map.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .resample import resize_bicubic
from .video import Frame, LabFrame, VideoGeometry, ycbcr_planes_to_lab

__all__ = [
    "SdspConfig",
    "SaliencyMap",
    "CcrMap",
    "minmax_normalize",
    "log_gabor_transfer",
    "frequency_prior",
    "color_prior",
    "location_prior",
    "sdsp",
    "ccr_from_saliency",
    "write_pgm",
    "write_map_file",
    "read_map_file",
]

MAP_FILE_MAGIC = b"STQPMAP1"


@dataclass(frozen=True)
class SdspConfig:
    """Prior parameters at the working resolution.

    Defaults come from the reference implementation of the prior-product
    saliency detector; none are content-dependent.
    """

    working_resolution: int = 256
    omega0: float = 0.002
    sigma_f: float = 6.2
    sigma_c: float = 0.25
    sigma_d: float = 114.0
    include_location_prior: bool = False

    def __post_init__(self):
        if self.working_resolution < 32:
            raise ValueError(f"working_resolution must be >= 32, got {self.working_resolution}")
        if not 0.0 < self.omega0 < 0.5:
            raise ValueError(f"omega0 must lie in (0, 0.5), got {self.omega0}")
        for name in ("sigma_f", "sigma_c", "sigma_d"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class SaliencyMap:
    values: np.ndarray
    frame_index: int


@dataclass(frozen=True)
class CcrMap:
    values: np.ndarray


def minmax_normalize(field: np.ndarray) -> np.ndarray:
    """Scale to [0, 1]; a constant field maps to all zeros."""
    lo = float(field.min())
    hi = float(field.max())
    if hi == lo:
        return np.zeros_like(field, dtype=np.float64)
    return (field - lo) / (hi - lo)


def log_gabor_transfer(shape: tuple[int, int], omega0: float, sigma_f: float) -> np.ndarray:
    """Radial log-Gabor transfer function on the FFT frequency grid.

    G(w) = exp(-(log(w/omega0))^2 / (2 sigma_f^2)) with G(0) = 0, where w
    is radial frequency in cycles/pixel (fftfreq layout, not shifted).
    """
    h, w = shape
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.fftfreq(w)[None, :]
    radius = np.hypot(fx, fy)
    with np.errstate(divide="ignore"):
        lg = np.exp(-(np.log(radius / omega0) ** 2) / (2.0 * sigma_f**2))
    lg[radius == 0.0] = 0.0
    return lg


def _filter_channel(channel: np.ndarray, transfer: np.ndarray) -> np.ndarray:
    return np.real(np.fft.ifft2(np.fft.fft2(channel) * transfer))


def frequency_prior(lab: LabFrame, cfg: SdspConfig) -> np.ndarray:
    """Band-pass energy across the three Lab channels, min-max normalized."""
    transfer = log_gabor_transfer(lab.l.shape, cfg.omega0, cfg.sigma_f)
    fl = _filter_channel(lab.l, transfer)
    fa = _filter_channel(lab.a, transfer)
    fb = _filter_channel(lab.b, transfer)
    return minmax_normalize(np.sqrt(fl**2 + fa**2 + fb**2))


def color_prior(lab: LabFrame, cfg: SdspConfig) -> np.ndarray:
    """Warmth prior: distance from neutral in the normalized a*b* plane.

    Constant a* and b* planes normalize to zero, so an achromatic frame
    yields an all-zero prior rather than a 0/0.
    """
    an = minmax_normalize(lab.a)
    bn = minmax_normalize(lab.b)
    return 1.0 - np.exp(-(an**2 + bn**2) / cfg.sigma_c**2)


def location_prior(dims: tuple[int, int], cfg: SdspConfig) -> np.ndarray:
    """Center-bias Gaussian, 1.0 at the center pixel."""
    h, w = dims
    ys = np.arange(h, dtype=np.float64) - h // 2
    xs = np.arange(w, dtype=np.float64) - w // 2
    dist2 = ys[:, None] ** 2 + xs[None, :] ** 2
    return np.exp(-dist2 / cfg.sigma_d**2)


def sdsp(frame: Frame, geometry: VideoGeometry, cfg: SdspConfig = SdspConfig()) -> SaliencyMap:
    """Saliency at the working resolution.

    The frame planes are bicubic-resized to a square working grid and
    converted to Lab; the priors are multiplied and min-max normalized.
    """
    res = cfg.working_resolution
    y = resize_bicubic(np.asarray(frame.y, dtype=np.float64), res, res)
    u = resize_bicubic(np.asarray(frame.u, dtype=np.float64), res, res)
    v = resize_bicubic(np.asarray(frame.v, dtype=np.float64), res, res)
    lab = ycbcr_planes_to_lab(y, u, v, geometry.bit_depth)

    combined = frequency_prior(lab, cfg) * color_prior(lab, cfg)
    if cfg.include_location_prior:
        combined = combined * location_prior(combined.shape, cfg)
    return SaliencyMap(minmax_normalize(combined), frame.index)


def ccr_from_saliency(s: SaliencyMap | CcrMap) -> CcrMap:
    """Elementwise complement; applying it twice returns the input values."""
    return CcrMap(1.0 - s.values)


def write_pgm(values: np.ndarray, path) -> None:
    """Write a [0,1] field as an 8-bit binary PGM."""
    h, w = values.shape
    data = np.clip(np.rint(values * 255.0), 0, 255).astype(np.uint8)
    with Path(path).open("wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def write_map_file(maps, path) -> None:
    """Pack per-frame maps: magic, u32 width/height/count, f32-LE data."""
    maps = list(maps)
    if not maps:
        raise ValueError("no maps to write")
    h, w = maps[0].values.shape
    with Path(path).open("wb") as fh:
        fh.write(MAP_FILE_MAGIC)
        fh.write(struct.pack("<III", w, h, len(maps)))
        for m in maps:
            if m.values.shape != (h, w):
                raise ValueError(f"map shape {m.values.shape} != {(h, w)}")
            fh.write(m.values.astype("<f4").tobytes())


def read_map_file(path) -> list[np.ndarray]:
    """Inverse of write_map_file; returns float64 fields."""
    raw = Path(path).read_bytes()
    if raw[:8] != MAP_FILE_MAGIC:
        raise ValueError(f"{path}: not a packed map file (bad magic)")
    w, h, count = struct.unpack("<III", raw[8:20])
    expected = 20 + 4 * w * h * count
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, got {len(raw)}")
    data = np.frombuffer(raw[20:], dtype="<f4").reshape(count, h, w)
    return [frame.astype(np.float64) for frame in data]
