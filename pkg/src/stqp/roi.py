"""Spatial delta-QP block grids and the ROI text-file format.

A CCR map is shrunk onto the encoder block grid with the shared bicubic
resampler, scaled by the frame's scheduled delta-QP, and quantized to
integers clamped so base_qp + delta never exceeds 51. The serialized form
is a plain ASCII text file: a `blocks_w blocks_h` header line followed by
one row-major line of integers per frame (LF endings).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal

import numpy as np

from .resample import resize_bicubic
from .saliency import CcrMap
from .schedule import MAX_QP

__all__ = [
    "BlockGrid",
    "RoiQpFrame",
    "RoiQpVideoMap",
    "RoiParseError",
    "resize_ccr",
    "uniform_grid",
    "roi_qp_frame",
    "write_roi_file",
    "read_roi_file",
]


class RoiParseError(ValueError):
    """ROI text file violates the canonical format."""


@dataclass(frozen=True)
class BlockGrid:
    """Real-valued CCR weights on the encoder block grid, in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.size == 0:
            raise ValueError(f"grid must be a non-empty 2D field, got {self.values.shape}")

    @property
    def blocks_h(self) -> int:
        return self.values.shape[0]

    @property
    def blocks_w(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class RoiQpFrame:
    """Integer delta-QP per block for one frame."""

    values: np.ndarray
    index: int


@dataclass(frozen=True)
class RoiQpVideoMap:
    """Per-frame block grids with uniform dimensions."""

    frames: tuple[RoiQpFrame, ...]

    def __post_init__(self):
        if not self.frames:
            raise ValueError("RoiQpVideoMap needs at least one frame")
        dims = self.frames[0].values.shape
        for f in self.frames:
            if f.values.shape != dims:
                raise ValueError(f"frame {f.index}: grid {f.values.shape} != {dims}")

    @property
    def blocks_h(self) -> int:
        return self.frames[0].values.shape[0]

    @property
    def blocks_w(self) -> int:
        return self.frames[0].values.shape[1]


def resize_ccr(ccr: CcrMap, blocks_w: int, blocks_h: int) -> BlockGrid:
    """Bicubic-resize the CCR onto the block grid, clamped to [0, 1].

    The clamp matters: the Catmull-Rom kernel overshoots near edges.
    """
    out = resize_bicubic(ccr.values, blocks_h, blocks_w)
    return BlockGrid(np.clip(out, 0.0, 1.0))


def uniform_grid(value: float = 1.0, blocks_w: int = 1, blocks_h: int = 1) -> BlockGrid:
    """Constant grid; the 1x1 all-ones case is the no-CCR scenario."""
    return BlockGrid(np.full((blocks_h, blocks_w), float(value)))


def roi_qp_frame(grid: BlockGrid, frame_delta: int, base_qp: int, index: int = 0) -> RoiQpFrame:
    """Scale the grid by the frame's delta-QP and quantize.

    Each block becomes clamp(round(grid * frame_delta), 0, 51 - base_qp),
    rounding ties away from zero.
    """
    if not 0 <= base_qp <= MAX_QP:
        raise ValueError(f"base_qp must lie in [0, {MAX_QP}], got {base_qp}")
    ceiling = MAX_QP - base_qp
    scaled = grid.values * frame_delta
    # grid and frame_delta are non-negative, so half-away == floor(x + 0.5)
    quantized = np.floor(scaled + 0.5).astype(np.int64)
    return RoiQpFrame(np.clip(quantized, 0, ceiling), index)


def build_video_map(
    grids: Iterable[BlockGrid], frame_deltas: Iterable[int], base_qp: int
) -> RoiQpVideoMap:
    """Per-frame ROI map from per-frame grids and the schedule curve."""
    frames = tuple(
        roi_qp_frame(grid, delta, base_qp, index=i)
        for i, (grid, delta) in enumerate(zip(grids, frame_deltas))
    )
    return RoiQpVideoMap(frames)


def write_roi_file(
    video_map: RoiQpVideoMap,
    path,
    mode: Literal["per_frame", "static_first_frame"] = "per_frame",
) -> None:
    """Serialize to the canonical ROI text format.

    static_first_frame writes only frame 0 (for encoders that accept a
    single static map).
    """
    if mode not in ("per_frame", "static_first_frame"):
        raise ValueError(f"unknown ROI file mode {mode!r}")
    frames = video_map.frames[:1] if mode == "static_first_frame" else video_map.frames
    lines = [f"{video_map.blocks_w} {video_map.blocks_h}"]
    for frame in frames:
        lines.append(" ".join(str(int(v)) for v in frame.values.reshape(-1)))
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("ascii"))


def read_roi_file(path) -> RoiQpVideoMap:
    """Parse the canonical per-frame ROI text format (exact inverse of
    write_roi_file); errors carry 1-based line numbers."""
    text = Path(path).read_text(encoding="ascii")
    lines = [ln for ln in text.split("\n") if ln.strip() != ""]
    if not lines:
        raise RoiParseError(f"{path}: empty ROI file")
    header = lines[0].split()
    if len(header) != 2:
        raise RoiParseError(f"{path}:1: header must be 'blocks_w blocks_h'")
    try:
        blocks_w, blocks_h = int(header[0]), int(header[1])
    except ValueError as exc:
        raise RoiParseError(f"{path}:1: non-integer header token: {exc}") from None
    if blocks_w < 1 or blocks_h < 1:
        raise RoiParseError(f"{path}:1: grid dims must be >= 1, got {blocks_w}x{blocks_h}")
    if len(lines) < 2:
        raise RoiParseError(f"{path}: no frame lines after the header")

    frames = []
    for lineno, line in enumerate(lines[1:], start=2):
        tokens = line.split()
        if len(tokens) != blocks_w * blocks_h:
            raise RoiParseError(
                f"{path}:{lineno}: expected {blocks_w * blocks_h} values, got {len(tokens)}"
            )
        try:
            values = np.array([int(t) for t in tokens], dtype=np.int64)
        except ValueError:
            raise RoiParseError(f"{path}:{lineno}: non-integer token") from None
        if values.min() < 0 or values.max() > MAX_QP:
            raise RoiParseError(f"{path}:{lineno}: delta-QP outside [0, {MAX_QP}]")
        frames.append(RoiQpFrame(values.reshape(blocks_h, blocks_w), len(frames)))
    return RoiQpVideoMap(tuple(frames))
