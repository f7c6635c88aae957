"""Temporal delta-QP schedules: Gaussian windows, cubic ramps, tiling.

A schedule window holds the per-frame peak delta-QP curve; tiling repeats
it over the sequence. Values are integers so they can feed an encoder's
QP offset interface directly, and base_qp + peak may never exceed the
HEVC ceiling of 51.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

__all__ = [
    "ScheduleConfig",
    "ConfigurationItem",
    "ScheduleConfigError",
    "round_half_away",
    "gaussian_schedule",
    "cubic_schedule",
    "tile_schedule",
    "enumerate_configurations",
]

MAX_QP = 51
FULL = "full"


class ScheduleConfigError(ValueError):
    """Schedule configuration violates its invariants."""


def round_half_away(x: float) -> int:
    """Round to nearest integer, ties away from zero (encoder QP convention)."""
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


@dataclass(frozen=True)
class ScheduleConfig:
    """Temporal schedule description.

    nf is the window length in frames or "full" for the whole sequence.
    allow_cubic_window lifts the rule that cubic ramps must span the full
    sequence (a repeating cubic window has a sharp QP drop at each cycle
    end, so it is rejected by default).
    """

    kind: Literal["gaussian", "cubic"]
    total_frames: int
    nf: int | str = FULL
    peak: int = 29
    floor: int = 0
    sigma_frac: float = 1.0 / 6.0
    base_qp: int = 22
    allow_cubic_window: bool = False

    def __post_init__(self):
        if self.kind not in ("gaussian", "cubic"):
            raise ScheduleConfigError(f"unknown schedule kind {self.kind!r}")
        if not 0 <= self.floor <= self.peak:
            raise ScheduleConfigError(
                f"need 0 <= floor <= peak, got floor={self.floor} peak={self.peak}"
            )
        if self.base_qp + self.peak > MAX_QP:
            raise ScheduleConfigError(
                f"base_qp {self.base_qp} + peak {self.peak} exceeds the QP ceiling {MAX_QP}"
            )
        if self.total_frames < 2:
            raise ScheduleConfigError(f"total_frames must be >= 2, got {self.total_frames}")
        if self.nf != FULL and not isinstance(self.nf, int):
            raise ScheduleConfigError(f"nf must be an integer or 'full', got {self.nf!r}")
        if self.window_frames < 2:
            raise ScheduleConfigError(f"nf must be >= 2, got {self.nf}")
        if self.sigma_frac <= 0:
            raise ScheduleConfigError(f"sigma_frac must be > 0, got {self.sigma_frac}")
        if self.kind == "cubic" and self.nf != FULL and not self.allow_cubic_window:
            raise ScheduleConfigError(
                "cubic schedules repeat with a sharp QP drop at the cycle end;"
                " only nf='full' is allowed (or set allow_cubic_window)"
            )

    @property
    def window_frames(self) -> int:
        return self.total_frames if self.nf == FULL else int(self.nf)

    def nf_label(self) -> str:
        return str(self.window_frames)


def gaussian_schedule(cfg: ScheduleConfig) -> list[int]:
    """Symmetric Gaussian window over nf frames.

    dQP(f) = round(floor + (peak-floor) * exp(-(f-c)^2 / (2 sigma^2)))
    with c = (nf-1)/2 and sigma = sigma_frac * nf.
    """
    if cfg.kind != "gaussian":
        raise ScheduleConfigError(f"gaussian_schedule called with kind={cfg.kind!r}")
    nf = cfg.window_frames
    c = (nf - 1) / 2.0
    sigma = cfg.sigma_frac * nf
    span = cfg.peak - cfg.floor
    return [
        round_half_away(cfg.floor + span * math.exp(-((f - c) ** 2) / (2.0 * sigma**2)))
        for f in range(nf)
    ]


def cubic_schedule(cfg: ScheduleConfig) -> list[int]:
    """Monotone cubic ramp from floor to peak over the window.

    dQP(f) = round(floor + (peak-floor) * (f/(N-1))^3); the endpoints are
    exactly floor and peak.
    """
    if cfg.kind != "cubic":
        raise ScheduleConfigError(f"cubic_schedule called with kind={cfg.kind!r}")
    n = cfg.window_frames
    span = cfg.peak - cfg.floor
    return [round_half_away(cfg.floor + span * (f / (n - 1)) ** 3) for f in range(n)]


def schedule_window(cfg: ScheduleConfig) -> list[int]:
    return gaussian_schedule(cfg) if cfg.kind == "gaussian" else cubic_schedule(cfg)


def tile_schedule(window: list[int], total_frames: int) -> list[int]:
    """Repeat the window over the sequence: out[f] = window[f mod nf]."""
    if len(window) < 2:
        raise ScheduleConfigError(f"window must have >= 2 frames, got {len(window)}")
    nf = len(window)
    return [window[f % nf] for f in range(total_frames)]


def frame_delta_qp(cfg: ScheduleConfig) -> list[int]:
    """Per-frame delta-QP curve for the whole sequence."""
    return tile_schedule(schedule_window(cfg), cfg.total_frames)


@dataclass(frozen=True)
class ConfigurationItem:
    """One of the eight stimulus configurations: a schedule x CCR on/off."""

    schedule: ScheduleConfig
    use_ccr: bool
    label: str


def enumerate_configurations(
    total_frames: int,
    peak: int = 29,
    floor: int = 0,
    sigma_frac: float = 1.0 / 6.0,
    base_qp: int = 22,
    blocks: int = 10,
) -> list[ConfigurationItem]:
    """The full stimulus grid: {gaussian nf=16, nf=32, full; cubic full}
    crossed with {no CCR, CCR}, in a stable order (8 items).

    Labels follow <nf-N>-BS-<1|blocks>-<G|P3>; G is Gaussian, P3 cubic.
    """
    shared = dict(
        total_frames=total_frames, peak=peak, floor=floor,
        sigma_frac=sigma_frac, base_qp=base_qp,
    )
    schedules = [
        (ScheduleConfig(kind="gaussian", nf=16, **shared), "G"),
        (ScheduleConfig(kind="gaussian", nf=32, **shared), "G"),
        (ScheduleConfig(kind="gaussian", nf=FULL, **shared), "G"),
        (ScheduleConfig(kind="cubic", nf=FULL, **shared), "P3"),
    ]
    items = []
    for cfg, tag in schedules:
        for use_ccr in (False, True):
            bs = blocks if use_ccr else 1
            label = f"nf-{cfg.nf_label()}-BS-{bs}-{tag}"
            items.append(ConfigurationItem(cfg, use_ccr, label))
    return items
