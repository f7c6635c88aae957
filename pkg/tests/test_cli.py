"""CLI: each subcommand drives its module through the documented surface."""

import csv
import json

import pytest

from stqp.cli import main
from stqp.roi import read_roi_file
from stqp.saliency import read_map_file
from stqp.study import ingest_ratings, load_plan


@pytest.fixture
def synth_yuv(tmp_path):
    spec = {
        "geometry": {"width": 64, "height": 64, "bit_depth": 10, "fps": 24, "num_frames": 8},
        "rects": [{"x": 8, "y": 8, "w": 16, "h": 16, "vx": 1, "vy": 0,
                   "luma": 900, "cb": 409, "cr": 960}],
        "background": 256,
        "noise_sigma": 1.5,
        "seed": 3,
    }
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))
    yuv = tmp_path / "src.yuv"
    assert main(["synth", "--spec", str(spec_path), "-o", str(yuv)]) == 0
    return yuv


GEO_ARGS = ["--width", "64", "--height", "64", "--bit-depth", "10",
            "--fps", "24", "--frames", "8"]


def test_synth_output_size(synth_yuv):
    assert synth_yuv.stat().st_size == 8 * (64 * 64 * 2 + 2 * 32 * 32 * 2)


def test_saliency_outputs(tmp_path, synth_yuv):
    map_file = tmp_path / "maps.bin"
    pgm_dir = tmp_path / "pgms"
    rc = main([
        "saliency", "--input", str(synth_yuv), *GEO_ARGS,
        "--working-res", "32", "--ccr",
        "--pgm-dir", str(pgm_dir), "--map-file", str(map_file),
    ])
    assert rc == 0
    maps = read_map_file(map_file)
    assert len(maps) == 8
    assert all(m.shape == (32, 32) for m in maps)
    assert len(list(pgm_dir.glob("*.pgm"))) == 8


def test_schedule_csv(tmp_path):
    out = tmp_path / "sched.csv"
    rc = main(["schedule", "--kind", "gaussian", "--total-frames", "48",
               "--nf", "16", "-o", str(out)])
    assert rc == 0
    with out.open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["frame", "delta_qp"]
    assert len(rows) == 49
    assert rows[1] == ["0", "1"]


def test_roi_from_maps_and_schedule(tmp_path, synth_yuv):
    map_file = tmp_path / "maps.bin"
    main(["saliency", "--input", str(synth_yuv), *GEO_ARGS,
          "--working-res", "32", "--map-file", str(map_file)])
    sched = tmp_path / "sched.csv"
    main(["schedule", "--kind", "gaussian", "--total-frames", "8",
          "--nf", "8", "-o", str(sched)])
    roi_out = tmp_path / "roi.txt"
    rc = main(["roi", "--maps", str(map_file), "--schedule", str(sched),
               "--blocks", "10", "-o", str(roi_out)])
    assert rc == 0
    vm = read_roi_file(roi_out)
    assert (vm.blocks_w, vm.blocks_h) == (10, 10)
    assert len(vm.frames) == 8


def test_encode_and_match(tmp_path, synth_yuv, capsys):
    out = tmp_path / "out.hevc"
    rc = main(["encode", "--input", str(synth_yuv), *GEO_ARGS,
               "--qp", "22", "--encoder", "stub", "-o", str(out)])
    assert rc == 0
    result = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert result["size"] == 8 * 12000

    rc = main(["match", "--input", str(synth_yuv), *GEO_ARGS,
               "--target-file", str(out), "--encoder", "stub",
               "--out-dir", str(tmp_path / "probes")])
    assert rc == 0
    match = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert match["qp"] == 22
    assert match["ratio"] == 1.0


def test_pipeline_plan_analyze(tmp_path, synth_yuv, capsys):
    config = {
        "sources": [{"name": "Synthetic", "path": str(synth_yuv),
                     "width": 64, "height": 64, "bit_depth": 10,
                     "fps": 24, "num_frames": 8}],
        "out_dir": str(tmp_path / "out"),
        "encoder": "stub",
        "sdsp": {"working_resolution": 32},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(config))
    assert main(["pipeline", "--config", str(cfg_path)]) == 0

    stimuli_path = tmp_path / "out" / "stimuli.json"
    plan_path = tmp_path / "plan.json"
    rc = main(["plan", "--stimuli", str(stimuli_path), "--seed", "5",
               "--repeats", "2",
               "--training-good", "good.bin", "--training-bad", "bad.bin",
               "-o", str(plan_path)])
    assert rc == 0
    plan = load_plan(plan_path)
    assert len(plan.items) == 8 + 1 + 2  # tests + hidden ref + repeats

    # synthesize ratings for the analyze step: observers rate everything 3..5
    ratings_path = tmp_path / "ratings.csv"
    with ratings_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["observer", "stimulus", "score", "timestamp",
                         "presentation_index"])
        for o in range(4):
            for i, item in enumerate(plan.items):
                writer.writerow([f"obs{o}", item.id, 3 + (o + i) % 3, "t", i])
    out_dir = tmp_path / "reports"
    rc = main(["analyze", "--ratings", str(ratings_path),
               "--manifest", str(tmp_path / "out" / "manifest.csv"),
               "--out-dir", str(out_dir)])
    assert rc == 0
    assert (out_dir / "mos.csv").is_file()
    assert (out_dir / "observers.csv").is_file()
    assert (out_dir / "bitrate.csv").is_file()
    with (out_dir / "bitrate.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 9  # header + 8 config pairs
    ingest_ratings(ratings_path)  # ratings CSV stays ingestible
