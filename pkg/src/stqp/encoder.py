"""HEVC encoder invocation: external CLI encoder or deterministic stub.

The external path assembles the fixed flag set used throughout the
experiments (single I-frame, GOP 0, ultrafast preset) and shells out to
the encoder named by config or the STQP_ENCODER environment variable.
The stub path models output size as halving per 6 QP steps, which gives
the size matcher a realistic monotone curve without an encoder binary.
"""

from __future__ import annotations

import os
import shutil
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from .roi import RoiQpVideoMap, write_roi_file
from .video import VideoGeometry

__all__ = [
    "EncodeJob",
    "EncodeResult",
    "EncoderNotFoundError",
    "EncodeFailedError",
    "ENCODER_ENV_VAR",
    "build_command",
    "encode",
    "stub_encode",
    "stub_size",
]

ENCODER_ENV_VAR = "STQP_ENCODER"
STUB_BYTES_PER_FRAME = 12000
STUB_REFERENCE_QP = 22


class EncoderNotFoundError(RuntimeError):
    """No encoder binary could be resolved for an external job."""


class EncodeFailedError(RuntimeError):
    """The encoder exited nonzero or produced no output."""


@dataclass
class EncodeJob:
    input_path: Path
    geometry: VideoGeometry
    output_path: Path
    base_qp: int = 22
    roi: RoiQpVideoMap | None = None
    roi_mode: Literal["per_frame", "static_first_frame"] = "per_frame"
    encoder: Literal["external", "stub"] = "stub"
    encoder_binary: str | None = None
    extra_flags: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not 0 <= self.base_qp <= 51:
            raise ValueError(f"base_qp must lie in [0, 51], got {self.base_qp}")
        self.input_path = Path(self.input_path)
        self.output_path = Path(self.output_path)


@dataclass(frozen=True)
class EncodeResult:
    output_path: Path
    size: int
    bitrate: float
    wall_time: float
    encoder_id: str


def bitrate_bps(size_bytes: int, geometry: VideoGeometry) -> float:
    """bits/second = 8 * bytes * fps / num_frames."""
    return 8.0 * size_bytes * geometry.fps / geometry.num_frames


def resolve_binary(job: EncodeJob) -> str:
    name = job.encoder_binary or os.environ.get(ENCODER_ENV_VAR) or "kvazaar"
    resolved = shutil.which(name)
    if resolved is None and Path(name).is_file() and os.access(name, os.X_OK):
        resolved = name
    if resolved is None:
        raise EncoderNotFoundError(
            f"encoder binary {name!r} not found (set {ENCODER_ENV_VAR} or pass encoder_binary)"
        )
    return resolved


def build_command(job: EncodeJob, roi_path: Path | None = None) -> list[str]:
    """Deterministic token list for an external encode.

    Flags are the common parameter set plus --input/--output plumbing,
    --roi when a map is attached, and user extras at the end.
    """
    geo = job.geometry
    tokens = [
        resolve_binary(job),
        "--input", str(job.input_path),
        "--output", str(job.output_path),
        "--input-res", f"{geo.width}x{geo.height}",
        "--input-bitdepth", str(geo.bit_depth),
        "--input-fps", f"{geo.fps:g}",
        "--qp", str(job.base_qp),
        "--period", "0",
        "--gop", "0",
        "--preset", "ultrafast",
    ]
    if job.roi is not None:
        if roi_path is None:
            raise ValueError("job has an ROI map but no serialized roi_path was given")
        tokens += ["--roi", str(roi_path)]
    tokens += list(job.extra_flags)
    return tokens


def stub_size(job: EncodeJob) -> int:
    """Deterministic size model: halving per 6 QP steps above 22.

    size = sum over frames of round(C * 2^-((base_qp + mean_dqp - 22)/6)),
    where mean_dqp is the mean of the frame's ROI blocks (0 without ROI).
    """
    num_frames = job.geometry.num_frames
    if job.roi is None:
        mean_dqp = [0.0] * num_frames
    else:
        per_frame = [float(np.mean(f.values)) for f in job.roi.frames]
        # a static map (fewer ROI frames than video frames) applies throughout
        mean_dqp = [per_frame[min(i, len(per_frame) - 1)] for i in range(num_frames)]
    total = 0
    for i in range(num_frames):
        exponent = -(job.base_qp + mean_dqp[i] - STUB_REFERENCE_QP) / 6.0
        total += int(np.floor(STUB_BYTES_PER_FRAME * 2.0**exponent + 0.5))
    return total


def stub_encode(job: EncodeJob) -> EncodeResult:
    """Write a placeholder bitstream of the modeled size."""
    start = time.perf_counter()
    size = stub_size(job)
    job.output_path.parent.mkdir(parents=True, exist_ok=True)
    with job.output_path.open("wb") as fh:
        fh.write(b"\0" * size)
    wall = time.perf_counter() - start
    return EncodeResult(
        output_path=job.output_path,
        size=size,
        bitrate=bitrate_bps(size, job.geometry),
        wall_time=wall,
        encoder_id="stub",
    )


def encode(job: EncodeJob) -> EncodeResult:
    """Run the job to completion and report the output size and bitrate.

    External failures surface the child's stderr; a failed run leaves no
    partial output behind.
    """
    if job.encoder == "stub":
        return stub_encode(job)
    if not job.input_path.is_file():
        raise FileNotFoundError(f"input not found: {job.input_path}")

    roi_path = None
    if job.roi is not None:
        roi_path = job.output_path.with_suffix(".roi.txt")
        write_roi_file(job.roi, roi_path, mode=job.roi_mode)
    cmd = build_command(job, roi_path)
    job.output_path.parent.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    proc = subprocess.run(cmd, capture_output=True, text=True)
    wall = time.perf_counter() - start
    if proc.returncode != 0:
        job.output_path.unlink(missing_ok=True)
        raise EncodeFailedError(
            f"{cmd[0]} exited {proc.returncode} for {job.output_path.name}:\n{proc.stderr}"
        )
    if not job.output_path.is_file() or job.output_path.stat().st_size == 0:
        job.output_path.unlink(missing_ok=True)
        raise EncodeFailedError(f"{cmd[0]} produced no output at {job.output_path}")

    size = job.output_path.stat().st_size
    return EncodeResult(
        output_path=job.output_path,
        size=size,
        bitrate=bitrate_bps(size, job.geometry),
        wall_time=wall,
        encoder_id=cmd[0],
    )
