"""Command-line entry points for the toolkit.

Subcommands cover the pipeline stages individually (synth, saliency,
schedule, roi, encode, match), the orchestrated run (pipeline), and the
study side (plan, serve, analyze).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import analysis, study
from .encoder import EncodeJob, encode
from .matcher import MatchConstraint, match_constant_qp
from .pipeline import PipelineConfig, run_pipeline
from .roi import read_roi_file, resize_ccr, uniform_grid, build_video_map, write_roi_file
from .saliency import (
    CcrMap, SdspConfig, ccr_from_saliency, read_map_file, sdsp, write_map_file, write_pgm,
)
from .schedule import ScheduleConfig, frame_delta_qp
from .study import StimulusRecord, build_session, ingest_ratings, load_plan, save_plan
from .video import VideoGeometry, load_synth_spec, read_yuv, synth_video, write_yuv


def _add_geometry_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--bit-depth", type=int, default=10, choices=(8, 10))
    p.add_argument("--fps", type=float, default=24.0)
    p.add_argument("--frames", type=int, required=True, help="number of frames")


def _geometry(args) -> VideoGeometry:
    return VideoGeometry(
        width=args.width, height=args.height, bit_depth=args.bit_depth,
        fps=args.fps, num_frames=args.frames,
    )


def cmd_synth(args) -> int:
    spec = load_synth_spec(args.spec)
    seq = synth_video(spec)
    write_yuv(args.output, seq.frames, spec.geometry)
    print(f"wrote {spec.geometry.num_frames} frames to {args.output}")
    return 0


def cmd_saliency(args) -> int:
    geometry = _geometry(args)
    cfg = SdspConfig(
        working_resolution=args.working_res, omega0=args.omega0,
        sigma_f=args.sigma_f, sigma_c=args.sigma_c, sigma_d=args.sigma_d,
        include_location_prior=args.location_prior,
    )
    maps = []
    pgm_dir = Path(args.pgm_dir) if args.pgm_dir else None
    if pgm_dir:
        pgm_dir.mkdir(parents=True, exist_ok=True)
    for frame in read_yuv(args.input, geometry):
        s = sdsp(frame, geometry, cfg)
        out = ccr_from_saliency(s) if args.ccr else s
        maps.append(out)
        if pgm_dir:
            write_pgm(out.values, pgm_dir / f"{frame.index:05d}.pgm")
    if args.map_file:
        write_map_file(maps, args.map_file)
    kind = "CCR" if args.ccr else "saliency"
    print(f"computed {len(maps)} {kind} maps")
    return 0


def cmd_schedule(args) -> int:
    cfg = ScheduleConfig(
        kind=args.kind, total_frames=args.total_frames,
        nf="full" if args.nf == "full" else int(args.nf),
        peak=args.peak, floor=args.floor, sigma_frac=args.sigma_frac,
        base_qp=args.base_qp,
    )
    deltas = frame_delta_qp(cfg)
    with open(args.output, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "delta_qp"])
        for f, d in enumerate(deltas):
            writer.writerow([f, d])
    print(f"wrote {len(deltas)} frame deltas to {args.output}")
    return 0


def _read_schedule_csv(path) -> list[int]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["frame", "delta_qp"]:
            raise ValueError(f"{path}: expected header frame,delta_qp")
        return [int(row[1]) for row in reader if row]


def cmd_roi(args) -> int:
    fields = read_map_file(args.maps)
    deltas = _read_schedule_csv(args.schedule)
    if len(deltas) != len(fields):
        raise ValueError(f"{len(fields)} maps but {len(deltas)} schedule frames")
    grids = []
    for field in fields:
        ccr = CcrMap(field) if args.maps_are_ccr else CcrMap(1.0 - field)
        grids.append(resize_ccr(ccr, args.blocks, args.blocks))
    video_map = build_video_map(grids, deltas, args.base_qp)
    write_roi_file(video_map, args.output, mode=args.mode)
    print(f"wrote ROI map ({video_map.blocks_w}x{video_map.blocks_h}, "
          f"{len(video_map.frames)} frames) to {args.output}")
    return 0


def cmd_encode(args) -> int:
    geometry = _geometry(args)
    roi = read_roi_file(args.roi) if args.roi else None
    job = EncodeJob(
        input_path=Path(args.input), geometry=geometry, output_path=Path(args.output),
        base_qp=args.qp, roi=roi, roi_mode=args.roi_mode,
        encoder=args.encoder, encoder_binary=args.binary,
        extra_flags=args.extra or [],
    )
    result = encode(job)
    print(json.dumps({
        "output": str(result.output_path), "size": result.size,
        "bitrate": result.bitrate, "wall_time": round(result.wall_time, 3),
        "encoder": result.encoder_id,
    }))
    return 0


def cmd_match(args) -> int:
    geometry = _geometry(args)
    if args.target_file:
        target = Path(args.target_file).stat().st_size
    else:
        target = args.target
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def encode_at(qp: int) -> int:
        job = EncodeJob(
            input_path=Path(args.input), geometry=geometry,
            output_path=out_dir / f"probe-q{qp}.hevc", base_qp=qp,
            encoder=args.encoder, encoder_binary=args.binary,
        )
        return encode(job).size

    result = match_constant_qp(target, encode_at, MatchConstraint(min_ratio=args.min_ratio))
    print(json.dumps({
        "qp": result.qp, "size": result.size, "ratio": round(result.ratio, 6),
        "probes": result.probes,
    }))
    return 0


def cmd_pipeline(args) -> int:
    cfg = PipelineConfig.from_file(args.config)
    rows, errors = run_pipeline(cfg)
    print(f"manifest has {len(rows)} rows at {cfg.out_dir / 'manifest.csv'}")
    for stim_id, message in errors.items():
        print(f"FAILED {stim_id}: {message}", file=sys.stderr)
    return 1 if errors else 0


def cmd_plan(args) -> int:
    records = [
        StimulusRecord(**doc) for doc in json.loads(Path(args.stimuli).read_text())
    ]
    training = (
        StimulusRecord(id="training-good", media=args.training_good, role="training_good"),
        StimulusRecord(id="training-bad", media=args.training_bad, role="training_bad"),
    )
    plan = build_session(
        records, repeat_count=args.repeats, seed=args.seed, training=training,
        fixed_repeats=args.fixed_repeats.split(",") if args.fixed_repeats else None,
        enforce_nonadjacency=not args.allow_adjacent,
    )
    violations = study.validate_session(plan)
    if violations:
        for v in violations:
            print(v, file=sys.stderr)
        return 1
    save_plan(plan, args.output)
    print(f"plan with {len(plan.items)} main items written to {args.output}")
    return 0


def cmd_serve(args) -> int:
    from .service import serve_sessions

    plan = load_plan(args.plan)
    serve_sessions(
        plan, args.media_root, args.ratings,
        host=args.host, port=args.port, ui_dir=args.ui_dir,
    )
    return 0


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def cmd_analyze(args) -> int:
    ratings = ingest_ratings(args.ratings)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    mos_rows = []
    for stimulus in ratings.stimuli():
        entry = analysis.mos(ratings, stimulus)
        mos_rows.append([entry.stimulus, f"{entry.mean:.4f}", f"{entry.sd:.4f}", entry.n])
    _write_csv(out_dir / "mos.csv", ["stimulus", "mos", "sd", "n"], mos_rows)

    reliability = analysis.screen_observers(ratings)
    _write_csv(
        out_dir / "observers.csv",
        ["observer", "agreement", "intra_distance", "low_agreement", "high_distance"],
        [
            [r.observer, f"{r.agreement:.4f}", f"{r.intra_distance:.4f}",
             int(r.low_agreement), int(r.high_distance)]
            for r in reliability
        ],
    )

    repeat_rows = []
    for stimulus in analysis.derive_repeated_stimuli(ratings):
        mean, sd, (lo, hi) = analysis.repeat_stimulus_stats(ratings, stimulus)
        repeat_rows.append([stimulus, f"{mean:.4f}", f"{sd:.4f}", f"[{lo}-{hi}]"])
    _write_csv(out_dir / "repeats.csv", ["stimulus", "mean", "sd", "range"], repeat_rows)

    print(f"{len(mos_rows)} stimuli, {len(reliability)} observers analyzed")
    for r in reliability:
        flags = []
        if r.low_agreement:
            flags.append("low_agreement")
        if r.high_distance:
            flags.append("high_distance")
        print(f"  {r.observer}: agreement {r.agreement:.2%}, "
              f"distance {r.intra_distance:.3f} {' '.join(flags)}")

    if args.manifest:
        from .pipeline import load_manifest

        rows = load_manifest(args.manifest)
        report = analysis.bitrate_report(rows)
        _write_csv(
            out_dir / "bitrate.csv",
            ["source", "config", "stimulus_id", "baseline_id",
             "stimulus_mbps", "baseline_mbps", "ratio", "min_flag"],
            [
                [r["source"], r["config"], r["stimulus_id"], r["baseline_id"],
                 f"{r['stimulus_mbps']:.4f}", f"{r['baseline_mbps']:.4f}",
                 f"{r['ratio']:.4f}", r["min_flag"]]
                for r in report
            ],
        )
        mos_by_id = {row[0]: row for row in mos_rows}
        plot_rows = []
        for r in report:
            stim_mos = mos_by_id.get(r["stimulus_id"])
            base_mos = mos_by_id.get(r["baseline_id"])
            if stim_mos and base_mos:
                plot_rows.append([
                    r["source"], r["config"],
                    stim_mos[1], stim_mos[2], base_mos[1], base_mos[2],
                ])
        _write_csv(
            out_dir / "plotdata.csv",
            ["source", "config", "mos", "sd", "baseline_mos", "baseline_sd"],
            plot_rows,
        )
        print(f"bitrate report: {len(report)} pairs")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stqp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="render a synthetic YUV source from a spec")
    p.add_argument("--spec", required=True, help="generator spec JSON")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("saliency", help="per-frame saliency or CCR maps")
    p.add_argument("--input", required=True)
    _add_geometry_args(p)
    p.add_argument("--working-res", type=int, default=256)
    p.add_argument("--omega0", type=float, default=0.002)
    p.add_argument("--sigma-f", type=float, default=6.2)
    p.add_argument("--sigma-c", type=float, default=0.25)
    p.add_argument("--sigma-d", type=float, default=114.0)
    p.add_argument("--location-prior", action="store_true")
    p.add_argument("--ccr", action="store_true", help="emit complements (CCR)")
    p.add_argument("--pgm-dir", help="write per-frame 8-bit PGMs here")
    p.add_argument("--map-file", help="write the packed float map file here")
    p.set_defaults(func=cmd_saliency)

    p = sub.add_parser("schedule", help="emit a per-frame delta-QP CSV")
    p.add_argument("--kind", choices=("gaussian", "cubic"), required=True)
    p.add_argument("--total-frames", type=int, required=True)
    p.add_argument("--nf", default="full", help="window frames or 'full'")
    p.add_argument("--peak", type=int, default=29)
    p.add_argument("--floor", type=int, default=0)
    p.add_argument("--sigma-frac", type=float, default=1.0 / 6.0)
    p.add_argument("--base-qp", type=int, default=22)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("roi", help="ROI text file from maps + schedule CSV")
    p.add_argument("--maps", required=True, help="packed map file (saliency)")
    p.add_argument("--maps-are-ccr", action="store_true",
                   help="maps are already complements")
    p.add_argument("--schedule", required=True, help="schedule CSV")
    p.add_argument("--blocks", type=int, default=10)
    p.add_argument("--base-qp", type=int, default=22)
    p.add_argument("--mode", choices=("per_frame", "static_first_frame"),
                   default="per_frame")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_roi)

    p = sub.add_parser("encode", help="run one encode job")
    p.add_argument("--input", required=True)
    _add_geometry_args(p)
    p.add_argument("--qp", type=int, default=22)
    p.add_argument("--roi", help="ROI text file")
    p.add_argument("--roi-mode", choices=("per_frame", "static_first_frame"),
                   default="per_frame")
    p.add_argument("--encoder", choices=("external", "stub"), default="stub")
    p.add_argument("--binary", help="encoder binary (or set STQP_ENCODER)")
    p.add_argument("--extra", nargs="*", help="extra encoder flags")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("match", help="find the size-matched constant QP")
    p.add_argument("--input", required=True)
    _add_geometry_args(p)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--target", type=int, help="target size in bytes")
    group.add_argument("--target-file", help="file whose size is the target")
    p.add_argument("--min-ratio", type=float, default=0.95)
    p.add_argument("--encoder", choices=("external", "stub"), default="stub")
    p.add_argument("--binary")
    p.add_argument("--out-dir", default="match-probes")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("pipeline", help="run the full stimulus pipeline")
    p.add_argument("--config", required=True, help="pipeline config JSON")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("plan", help="build a randomized session plan")
    p.add_argument("--stimuli", required=True, help="stimuli records JSON")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--repeats", type=int, default=6)
    p.add_argument("--training-good", required=True, help="media path")
    p.add_argument("--training-bad", required=True, help="media path")
    p.add_argument("--fixed-repeats", help="comma-separated stimulus ids")
    p.add_argument("--allow-adjacent", action="store_true")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("serve", help="run the rating session service")
    p.add_argument("--plan", required=True)
    p.add_argument("--media-root", default=".")
    p.add_argument("--ratings", required=True, help="ratings CSV to append to")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ui-dir", help="serve the rating UI from this directory at /app")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("analyze", help="MOS, reliability and bitrate reports")
    p.add_argument("--ratings", required=True)
    p.add_argument("--manifest", help="pipeline manifest CSV")
    p.add_argument("--out-dir", default="reports")
    p.set_defaults(func=cmd_analyze)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
