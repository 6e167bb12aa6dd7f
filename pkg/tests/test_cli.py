"""Command-line surface: subcommands, flag/config precedence, exit codes."""

from __future__ import annotations

import json

import pytest

from castscan.cli import main

from synthmedia import ide_frame, make_video_dir, write_gray, write_manifest


def _basic_manifest(tmp_path):
    make_video_dir(tmp_path / "cast", "IIIII")
    make_video_dir(tmp_path / "talk", "NNNNN")
    return write_manifest(
        tmp_path / "m.jsonl",
        [
            {"video_id": "cast", "source": "cast", "truth_label": True},
            {"video_id": "talk", "source": "talk", "truth_label": False},
        ],
    )


class TestScanCommand:
    def test_scan_writes_report_and_prints_verdicts(self, tmp_path, capsys):
        manifest = _basic_manifest(tmp_path)
        out = tmp_path / "scan.json"
        code = main(["scan", "--manifest", str(manifest), "--out", str(out)])
        assert code == 0
        printed = capsys.readouterr().out
        assert "cast: screencast" in printed
        assert "talk: other" in printed
        report = json.loads(out.read_text())
        assert report["video_count"] == 2

    def test_scan_exit_code_reflects_failures(self, tmp_path, capsys):
        manifest = write_manifest(
            tmp_path / "m.jsonl", [{"video_id": "ghost", "source": "nowhere"}]
        )
        code = main(["scan", "--manifest", str(manifest), "--out", str(tmp_path / "r.json")])
        assert code == 1
        assert "FAILED" in capsys.readouterr().out

    def test_missing_manifest_flag(self, capsys):
        with pytest.raises(SystemExit, match="--manifest"):
            main(["scan"])

    def test_flag_beats_config_file(self, tmp_path, capsys):
        # config says min_run 4 (talk pattern "IIIN" fails); flag loosens it to 3
        make_video_dir(tmp_path / "v", "IIIN")
        manifest = write_manifest(tmp_path / "m.jsonl", [{"video_id": "v", "source": "v"}])
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"min_run": 4}), encoding="utf-8")
        out = tmp_path / "r.json"

        main(["scan", "--manifest", str(manifest), "--config", str(cfg), "--out", str(out)])
        assert not json.loads(out.read_text())["records"][0]["verdict"]["is_screencast"]

        main([
            "scan", "--manifest", str(manifest), "--config", str(cfg),
            "--min-run", "3", "--out", str(out),
        ])
        report = json.loads(out.read_text())
        assert report["records"][0]["verdict"]["is_screencast"]
        assert report["config"]["min_run"] == 3

    def test_bad_config_is_a_clean_error(self, tmp_path, capsys):
        manifest = _basic_manifest(tmp_path)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"min_rnu": 2}), encoding="utf-8")
        code = main(["scan", "--manifest", str(manifest), "--config", str(cfg)])
        assert code == 2
        assert "min_rnu" in capsys.readouterr().err


class TestEvaluateCommand:
    def test_scan_then_evaluate(self, tmp_path, capsys):
        manifest = _basic_manifest(tmp_path)
        scan_out = tmp_path / "scan.json"
        main(["scan", "--manifest", str(manifest), "--out", str(scan_out)])
        capsys.readouterr()

        eval_out = tmp_path / "eval.json"
        code = main([
            "evaluate", "--manifest", str(manifest), "--report", str(scan_out),
            "--runs", "5", "--out", str(eval_out),
        ])
        assert code == 0
        printed = capsys.readouterr().out
        assert "castscan" in printed and "random_baseline" in printed
        evaluation = json.loads(eval_out.read_text())
        tool = next(m for m in evaluation["methods"] if m["method"] == "castscan")
        assert tool["f1"] == 1.0

    def test_unreadable_report(self, tmp_path):
        manifest = _basic_manifest(tmp_path)
        with pytest.raises(SystemExit, match="cannot read"):
            main(["evaluate", "--manifest", str(manifest), "--report", str(tmp_path / "no.json")])


class TestExtractFramesCommand:
    def test_extracts_dedups_and_records_metadata(self, tmp_path, capsys):
        # seven 1 s frames, the middle three near-duplicates of frame 2
        make_video_dir(tmp_path / "v", "INIddNI", interval_s=1.0)
        out = tmp_path / "dataset"
        code = main([
            "extract-frames", "--source", str(tmp_path / "v"), "--out", str(out),
            "--interval", "1",
        ])
        assert code == 0
        written = sorted(p.name for p in out.glob("*.png"))
        assert len(written) == 5  # the two duplicates are dropped
        meta = json.loads((out / "extraction.json").read_text())
        assert meta["frame_count"] == 5
        assert meta["dedup_threshold"] == 0.05

    def test_keep_duplicates_flag(self, tmp_path):
        make_video_dir(tmp_path / "v", "Iddd", interval_s=1.0)
        out = tmp_path / "dataset"
        main([
            "extract-frames", "--source", str(tmp_path / "v"), "--out", str(out),
            "--interval", "1", "--keep-duplicates",
        ])
        assert len(list(out.glob("*.png"))) == 4

    def test_cap_limits_extraction(self, tmp_path):
        d = tmp_path / "v"
        d.mkdir()
        for i in range(30):
            write_gray(d / f"frame_{i}.png", ide_frame(i))
        out = tmp_path / "dataset"
        main([
            "extract-frames", "--source", str(d), "--out", str(out),
            "--interval", "1", "--cap", "10", "--keep-duplicates",
        ])
        assert len(list(out.glob("*.png"))) == 10


class TestClassifyFramesCommand:
    def test_labels_files_and_directories(self, tmp_path, capsys):
        make_video_dir(tmp_path / "v", "IN")
        code = main(["classify-frames", str(tmp_path / "v")])
        assert code == 0
        lines = [l for l in capsys.readouterr().out.splitlines() if "\t" in l]
        assert len(lines) == 2
        assert "\tide\t1.0000" in lines[0]
        assert "\tnon_ide\t" in lines[1]

    def test_no_frames_is_an_error(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        with pytest.raises(SystemExit, match="no frames"):
            main(["classify-frames", str(empty)])


class TestBaselineCommand:
    def test_prints_table(self, tmp_path, capsys):
        manifest = _basic_manifest(tmp_path)
        out = tmp_path / "baseline.json"
        code = main(["baseline", "--manifest", str(manifest), "--runs", "5", "--out", str(out)])
        assert code == 0
        printed = capsys.readouterr().out
        assert "random_baseline" in printed
        assert "all_positive_baseline" in printed
        record = json.loads(out.read_text())
        allpos = next(m for m in record["methods"] if m["method"] == "all_positive_baseline")
        assert allpos["precision"] == 0.5  # one positive of two videos

    def test_unlabeled_manifest_is_a_clean_error(self, tmp_path, capsys):
        make_video_dir(tmp_path / "v", "II")
        manifest = write_manifest(tmp_path / "m.jsonl", [{"video_id": "v", "source": "v"}])
        code = main(["baseline", "--manifest", str(manifest)])
        assert code == 2
        assert "missing truth labels" in capsys.readouterr().err
