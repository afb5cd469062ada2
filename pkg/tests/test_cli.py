"""Command-line interface, run in-process against the mounted service."""

import json

import pytest

from datrack.cli import main
from datrack.embed import BBox
from datrack.sampler import CorpusItem, write_corpus
from datrack.storage import (read_ground_truth, read_report, read_trajectory)


def _write_corpus(path):
    items = []
    for vid, inst in [("v0", "a"), ("v1", "b")]:
        for f in range(3):
            items.append(CorpusItem(
                item_id=f"{vid}-{inst}-{f}", kind="video", category="car",
                video_id=vid, frame_no=f, instance_id=inst,
                box=BBox(50.0, 60.0, 20.0, 30.0), payload_path=f"{vid}/{f}.png"))
    for i in range(2):
        items.append(CorpusItem(
            item_id=f"s{i}", kind="still", category="cat", video_id="",
            frame_no=0, instance_id="", box=BBox(10.0, 10.0, 5.0, 5.0),
            payload_path=f"stills/{i}.png"))
    write_corpus(path, items)


class TestSynth:
    def test_writes_scene_and_ground_truth(self, tmp_path, capsys):
        scene = tmp_path / "scene.json"
        gt = tmp_path / "gt.csv"
        main(["synth", "--preset", "outview", "--seed", "1",
              "--out", str(scene), "--gt-out", str(gt)])
        out = capsys.readouterr().out
        assert "wrote scene" in out and "wrote ground truth" in out

        data = json.loads(scene.read_text())
        boxes = read_ground_truth(gt)
        assert len(boxes) == data["frame_count"]
        assert boxes[0] is not None
        assert boxes[40] is None  # target off screen mid-sequence

    def test_requires_preset_or_scene(self, tmp_path):
        with pytest.raises(SystemExit, match="provide --preset or --scene"):
            main(["synth", "--out", str(tmp_path / "s.json")])


class TestTrack:
    def test_writes_trajectory_gt_and_report(self, tmp_path):
        traj = tmp_path / "traj.csv"
        gt = tmp_path / "gt.csv"
        rep = tmp_path / "rep.csv"
        main(["track", "--preset", "clutter", "--seed", "1", "--frames", "8",
              "--out", str(traj), "--gt-out", str(gt), "--report", str(rep)])

        entries = read_trajectory(traj)
        assert len(entries) == 8
        assert entries[0].score == 1.0
        assert len(read_ground_truth(gt)) == 8
        report = read_report(rep)
        assert "success_auc" in report
        assert 0.0 <= float(report["success_auc"]) <= 1.0

    def test_tracks_a_scene_file(self, tmp_path):
        scene = tmp_path / "scene.json"
        traj = tmp_path / "traj.csv"
        main(["synth", "--preset", "clutter", "--seed", "2", "--frames", "6",
              "--out", str(scene)])
        main(["track", "--scene", str(scene), "--out", str(traj)])
        assert len(read_trajectory(traj)) == 6

    def test_rejects_unknown_config_key(self, tmp_path):
        with pytest.raises(SystemExit):
            main(["track", "--preset", "clutter", "--frames", "4",
                  "--set", "warp_speed=9", "--out", str(tmp_path / "t.csv")])

    def test_rejects_malformed_set_flag(self, tmp_path):
        with pytest.raises(SystemExit, match="expects key=value"):
            main(["track", "--preset", "clutter", "--frames", "4",
                  "--set", "top_k", "--out", str(tmp_path / "t.csv")])


class TestEval:
    def test_scores_saved_files(self, tmp_path, capsys):
        traj = tmp_path / "traj.csv"
        gt = tmp_path / "gt.csv"
        rep = tmp_path / "rep.csv"
        main(["track", "--preset", "clutter", "--seed", "3", "--frames", "8",
              "--out", str(traj), "--gt-out", str(gt)])
        capsys.readouterr()

        main(["eval", "--trajectory", str(traj), "--gt", str(gt),
              "--out", str(rep)])
        out = capsys.readouterr().out
        assert any(line.startswith("success_auc=") for line in out.splitlines())
        assert "success_auc" in read_report(rep)

    def test_reset_protocol(self, tmp_path, capsys):
        main(["eval", "--reset", "--preset", "clutter", "--seed", "0",
              "--frames", "10", "--out", str(tmp_path / "r.csv")])
        out = capsys.readouterr().out
        assert any(line.startswith("accuracy=") for line in out.splitlines())
        report = read_report(tmp_path / "r.csv")
        assert {"accuracy", "failures", "reset_frames", "reinit_frames"} <= set(report)

    def test_needs_files_without_reset(self):
        with pytest.raises(SystemExit, match="--trajectory and --gt"):
            main(["eval"])


class TestSamplePairs:
    def test_writes_manifest_and_prints_stats(self, tmp_path, capsys):
        corpus = tmp_path / "corpus.tsv"
        pairs = tmp_path / "pairs.tsv"
        _write_corpus(corpus)
        main(["sample-pairs", "--corpus", str(corpus), "--count", "8",
              "--seed", "4", "--out", str(pairs), "--stats"])
        out = capsys.readouterr().out
        assert "wrote 8 pairs" in out
        assert "count=8" in out
        assert "positive_frac=0.5000" in out
        assert len(pairs.read_text().splitlines()) == 8

    def test_impossible_corpus_exits_with_detail(self, tmp_path):
        corpus = tmp_path / "corpus.tsv"
        _write_corpus(corpus)
        kept = [l for l in corpus.read_text().splitlines() if "\tcar\t" in l]
        corpus.write_text("\n".join(kept) + "\n")
        with pytest.raises(SystemExit, match="422"):
            main(["sample-pairs", "--corpus", str(corpus), "--count", "4",
                  "--out", str(tmp_path / "p.tsv")])


class TestBench:
    def test_prints_table_and_writes_timings(self, tmp_path, capsys):
        rep = tmp_path / "times.csv"
        main(["bench", "--n", "1,4", "--reps", "3", "--candidates", "8",
              "--out", str(rep)])
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].split() == ["n_distractors", "fold_ms", "factored_ms", "direct_ms"]
        assert lines[1].split()[0] == "1" and lines[2].split()[0] == "4"
        report = read_report(rep)
        assert {"fold_ms_n1", "factored_ms_n4", "direct_ms_n1"} <= set(report)


class TestConfig:
    def test_prints_resolved_values(self, capsys):
        main(["config", "--set", "top_k=16"])
        out = capsys.readouterr().out
        assert "top_k=16" in out

    def test_written_file_feeds_track(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        main(["config", "--set", "longterm=0", "--write", str(cfg)])
        capsys.readouterr()
        main(["track", "--preset", "clutter", "--seed", "1", "--frames", "5",
              "--config", str(cfg), "--out", str(tmp_path / "t.csv")])
        entries = read_trajectory(tmp_path / "t.csv")
        assert all(e.mode == "short" for e in entries)

    def test_rejects_unknown_key(self):
        with pytest.raises(SystemExit):
            main(["config", "--set", "nope=1"])
