"""End-to-end stimulus preparation: saliency -> ROI maps -> encodes ->
size-matched constant-QP baselines, tracked in a resumable manifest.

The manifest is an append-only CSV keyed by stimulus id; rows already
present are skipped on re-runs, so a completed manifest re-runs with
zero encodes. With the stub encoder the whole run is deterministic:
re-running from scratch reproduces the manifest byte for byte.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .encoder import EncodeJob, encode
from .matcher import MatchConstraint, match_constant_qp
from .roi import BlockGrid, RoiQpVideoMap, build_video_map, resize_ccr, uniform_grid, write_roi_file
from .saliency import SdspConfig, ccr_from_saliency, sdsp
from .schedule import ConfigurationItem, enumerate_configurations, frame_delta_qp
from .study import StimulusRecord
from .video import VideoGeometry, read_yuv

__all__ = ["SourceSpec", "PipelineConfig", "ManifestRow", "run_pipeline", "load_manifest"]

log = logging.getLogger(__name__)

MANIFEST_COLUMNS = [
    "stimulus_id", "kind", "source", "config", "roi", "qp", "size", "bitrate", "paired_id",
]


@dataclass(frozen=True)
class SourceSpec:
    name: str
    path: Path
    geometry: VideoGeometry


@dataclass
class PipelineConfig:
    sources: list[SourceSpec]
    out_dir: Path
    base_qp: int = 22
    peak: int = 29
    floor: int = 0
    sigma_frac: float = 1.0 / 6.0
    blocks: int = 10
    encoder: str = "stub"
    encoder_binary: str | None = None
    roi_mode: str = "per_frame"
    min_ratio: float = 0.95
    sdsp: SdspConfig = field(default_factory=SdspConfig)
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        if not self.sources:
            raise ValueError("pipeline needs at least one source")
        self.out_dir = Path(self.out_dir)

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        doc = json.loads(Path(path).read_text())
        sources = [
            SourceSpec(
                name=s["name"],
                path=Path(s["path"]),
                geometry=VideoGeometry(
                    width=s["width"], height=s["height"],
                    bit_depth=s.get("bit_depth", 10), fps=s.get("fps", 24),
                    num_frames=s["num_frames"],
                ),
            )
            for s in doc["sources"]
        ]
        sdsp_cfg = SdspConfig(**doc.get("sdsp", {}))
        keys = (
            "base_qp", "peak", "floor", "sigma_frac", "blocks", "encoder",
            "encoder_binary", "roi_mode", "min_ratio", "seed", "jobs",
        )
        kwargs = {k: doc[k] for k in keys if k in doc}
        return cls(sources=sources, out_dir=Path(doc["out_dir"]), sdsp=sdsp_cfg, **kwargs)


ManifestRow = dict


def _manifest_path(cfg: PipelineConfig) -> Path:
    return cfg.out_dir / "manifest.csv"


def load_manifest(path) -> list[ManifestRow]:
    path = Path(path)
    if not path.is_file():
        return []
    with path.open(newline="") as fh:
        return [dict(row) for row in csv.DictReader(fh)]


class _ManifestWriter:
    """Appends rows and keeps the id index for resume checks."""

    def __init__(self, path: Path):
        self.path = path
        self.rows = load_manifest(path)
        self.ids = {row["stimulus_id"] for row in self.rows}
        if not path.is_file():
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("w", newline="") as fh:
                csv.writer(fh).writerow(MANIFEST_COLUMNS)

    def append(self, row: ManifestRow) -> None:
        with self.path.open("a", newline="") as fh:
            csv.writer(fh).writerow([row[c] for c in MANIFEST_COLUMNS])
        self.rows.append(row)
        self.ids.add(row["stimulus_id"])

    def get(self, stimulus_id: str) -> ManifestRow | None:
        for row in self.rows:
            if row["stimulus_id"] == stimulus_id:
                return row
        return None


def _ccr_block_grids(cfg: PipelineConfig, source: SourceSpec) -> list[BlockGrid]:
    """Per-frame CCR on the block grid (the expensive per-source stage)."""

    def one(frame):
        ccr = ccr_from_saliency(sdsp(frame, source.geometry, cfg.sdsp))
        return resize_ccr(ccr, cfg.blocks, cfg.blocks)

    frames = read_yuv(source.path, source.geometry)
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(one, frames))
    return [one(f) for f in frames]


def _row(stimulus_id, kind, source, config, roi, qp, size, geometry, paired_id) -> ManifestRow:
    bitrate = 8.0 * size * geometry.fps / geometry.num_frames
    return {
        "stimulus_id": stimulus_id,
        "kind": kind,
        "source": source,
        "config": config,
        "roi": "1" if roi else "0",
        "qp": str(qp),
        "size": str(size),
        "bitrate": f"{bitrate:.6f}",
        "paired_id": paired_id,
    }


def _encode_stimulus(
    cfg: PipelineConfig,
    source: SourceSpec,
    item: ConfigurationItem,
    grids: list[BlockGrid] | None,
    stim_id: str,
) -> tuple[RoiQpVideoMap, int]:
    deltas = frame_delta_qp(item.schedule)
    if item.use_ccr:
        assert grids is not None
        video_map = build_video_map(grids, deltas, cfg.base_qp)
    else:
        ones = [uniform_grid(1.0)] * source.geometry.num_frames
        video_map = build_video_map(ones, deltas, cfg.base_qp)

    roi_dir = cfg.out_dir / "roi"
    roi_dir.mkdir(parents=True, exist_ok=True)
    write_roi_file(video_map, roi_dir / f"{stim_id}.txt", mode="per_frame")

    job = EncodeJob(
        input_path=source.path,
        geometry=source.geometry,
        output_path=cfg.out_dir / "bitstreams" / f"{stim_id}.hevc",
        base_qp=cfg.base_qp,
        roi=video_map,
        roi_mode=cfg.roi_mode,  # type: ignore[arg-type]
        encoder=cfg.encoder,  # type: ignore[arg-type]
        encoder_binary=cfg.encoder_binary,
    )
    return video_map, encode(job).size


def _match_baseline(
    cfg: PipelineConfig, source: SourceSpec, target_size: int, base_id: str
) -> tuple[int, int]:
    probe_dir = cfg.out_dir / "probes"
    probe_dir.mkdir(parents=True, exist_ok=True)
    probe_files: dict[int, Path] = {}

    def encode_at(qp: int) -> int:
        out = probe_dir / f"{base_id}-q{qp}.hevc"
        job = EncodeJob(
            input_path=source.path,
            geometry=source.geometry,
            output_path=out,
            base_qp=qp,
            encoder=cfg.encoder,  # type: ignore[arg-type]
            encoder_binary=cfg.encoder_binary,
        )
        probe_files[qp] = out
        return encode(job).size

    result = match_constant_qp(
        target_size, encode_at, MatchConstraint(min_ratio=cfg.min_ratio)
    )
    final = cfg.out_dir / "bitstreams" / f"{base_id}.hevc"
    final.parent.mkdir(parents=True, exist_ok=True)
    probe_files[result.qp].replace(final)
    for qp, path in probe_files.items():
        if qp != result.qp:
            path.unlink(missing_ok=True)
    return result.qp, result.size


def run_pipeline(cfg: PipelineConfig) -> tuple[list[ManifestRow], dict[str, str]]:
    """Prepare every stimulus and its baseline; returns (rows, errors).

    Errors are keyed by stimulus id; the pipeline keeps going so one bad
    encode does not lose the rest of the run.
    """
    for source in cfg.sources:
        if not source.path.is_file():
            raise FileNotFoundError(f"source not found: {source.path}")

    writer = _ManifestWriter(_manifest_path(cfg))
    errors: dict[str, str] = {}
    stimuli_records: list[StimulusRecord] = []

    for source in cfg.sources:
        items = enumerate_configurations(
            total_frames=source.geometry.num_frames,
            peak=cfg.peak, floor=cfg.floor, sigma_frac=cfg.sigma_frac,
            base_qp=cfg.base_qp, blocks=cfg.blocks,
        )
        grids: list[BlockGrid] | None = None
        need_ccr = any(
            item.use_ccr and f"{source.name}-{item.label}" not in writer.ids
            for item in items
        )
        if need_ccr:
            log.info("computing CCR block grids for %s", source.name)
            grids = _ccr_block_grids(cfg, source)

        for item in items:
            stim_id = f"{source.name}-{item.label}"
            base_id = f"{stim_id}-C-QP"
            try:
                stim_row = writer.get(stim_id)
                if stim_row is None:
                    _, size = _encode_stimulus(
                        cfg, source, item, grids if item.use_ccr else None, stim_id
                    )
                    stim_row = _row(
                        stim_id, "spatiotemporal", source.name, item.label,
                        item.use_ccr, cfg.base_qp, size, source.geometry, base_id,
                    )
                    writer.append(stim_row)
                if writer.get(base_id) is None:
                    qp, size = _match_baseline(
                        cfg, source, int(stim_row["size"]), base_id
                    )
                    writer.append(
                        _row(
                            base_id, "baseline", source.name, item.label,
                            False, qp, size, source.geometry, stim_id,
                        )
                    )
            except Exception as exc:  # noqa: BLE001 - per-stimulus isolation
                log.error("stimulus %s failed: %s", stim_id, exc)
                errors[stim_id] = str(exc)
                continue
            stimuli_records.append(
                StimulusRecord(
                    id=stim_id,
                    media=str(cfg.out_dir / "bitstreams" / f"{stim_id}.hevc"),
                    role="test",
                    config=item.label,
                )
            )

    for source in cfg.sources:
        stimuli_records.append(
            StimulusRecord(
                id=f"{source.name}-SRC", media=str(source.path),
                role="hidden_reference", config="source",
            )
        )
    (cfg.out_dir / "stimuli.json").write_text(
        json.dumps([record.__dict__ for record in stimuli_records], indent=2) + "\n"
    )
    return writer.rows, errors
