"""Manifest parsing, the decoded-frame cache, and config merging."""

from __future__ import annotations

import json

import pytest

from castscan import cache
from castscan.config import ScanConfig, build_config, config_hash, load_config_file
from castscan.frames import DecoderCommand, SamplingMode
from castscan.manifest import ManifestError, load_manifest, truth_map

from synthmedia import write_manifest


class TestManifest:
    def test_happy_path(self, tmp_path):
        path = write_manifest(
            tmp_path / "videos.jsonl",
            [
                {"video_id": "v1", "source": "clips/v1", "truth_label": True},
                {"video_id": "v2", "source": "/abs/v2", "truth_label": False, "notes": "talk"},
            ],
        )
        entries = load_manifest(path)
        assert [e.video_id for e in entries] == ["v1", "v2"]
        # relative sources resolve against the manifest's own directory
        assert entries[0].source == tmp_path / "clips/v1"
        assert str(entries[1].source) == "/abs/v2"
        assert entries[1].notes == "talk"

    def test_blank_lines_and_comments_skipped(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text(
            '# corpus, summer batch\n\n{"video_id": "v1", "source": "d"}\n',
            encoding="utf-8",
        )
        assert len(load_manifest(path)) == 1

    def test_unlabeled_entry_defaults_to_none(self, tmp_path):
        path = write_manifest(tmp_path / "m.jsonl", [{"video_id": "v", "source": "d"}])
        assert load_manifest(path)[0].truth_label is None

    def test_error_carries_line_number(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text('{"video_id": "v1", "source": "d"}\nnot json\n', encoding="utf-8")
        with pytest.raises(ManifestError, match=r"m\.jsonl:2"):
            load_manifest(path)

    def test_duplicate_video_id(self, tmp_path):
        path = write_manifest(
            tmp_path / "m.jsonl",
            [{"video_id": "v", "source": "a"}, {"video_id": "v", "source": "b"}],
        )
        with pytest.raises(ManifestError, match="duplicate"):
            load_manifest(path)

    def test_missing_fields(self, tmp_path):
        path = write_manifest(tmp_path / "m.jsonl", [{"video_id": "v"}])
        with pytest.raises(ManifestError, match="source"):
            load_manifest(path)

    def test_non_boolean_truth_label(self, tmp_path):
        path = write_manifest(
            tmp_path / "m.jsonl", [{"video_id": "v", "source": "d", "truth_label": "yes"}]
        )
        with pytest.raises(ManifestError, match="truth_label"):
            load_manifest(path)

    def test_non_object_record(self, tmp_path):
        (tmp_path / "m.jsonl").write_text("[1, 2]\n", encoding="utf-8")
        with pytest.raises(ManifestError, match="object"):
            load_manifest(tmp_path / "m.jsonl")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ManifestError, match="cannot read"):
            load_manifest(tmp_path / "ghost.jsonl")

    def test_truth_map(self, tmp_path):
        path = write_manifest(
            tmp_path / "m.jsonl",
            [
                {"video_id": "a", "source": "x", "truth_label": True},
                {"video_id": "b", "source": "y", "truth_label": False},
            ],
        )
        assert truth_map(load_manifest(path)) == {"a": True, "b": False}

    def test_truth_map_names_unlabeled_entries(self, tmp_path):
        path = write_manifest(
            tmp_path / "m.jsonl",
            [{"video_id": "a", "source": "x", "truth_label": True}, {"video_id": "b", "source": "y"}],
        )
        with pytest.raises(ValueError, match="b"):
            truth_map(load_manifest(path))


class TestFrameCache:
    def _calls(self, video) -> int:
        calls = video.with_suffix(".calls")
        return len(calls.read_text().splitlines()) if calls.exists() else 0

    def test_extracts_once_then_hits(self, fake_decoder, tmp_path):
        video = fake_decoder["make_video"]("clip", count=4)
        decoder = DecoderCommand(fake_decoder["command"])
        mode = SamplingMode.classification()
        root = tmp_path / "cache"

        first = cache.cache_frames(video, mode, decoder, root)
        assert len(list(first.glob("*.png"))) == 4
        assert self._calls(video) == 1
        second = cache.cache_frames(video, mode, decoder, root)
        assert second == first
        assert self._calls(video) == 1  # no second decoder run

    def test_mode_change_extracts_again(self, fake_decoder, tmp_path):
        video = fake_decoder["make_video"]("clip", count=2)
        decoder = DecoderCommand(fake_decoder["command"])
        root = tmp_path / "cache"
        a = cache.cache_frames(video, SamplingMode.classification(), decoder, root)
        b = cache.cache_frames(video, SamplingMode.training(), decoder, root)
        assert a != b
        assert self._calls(video) == 2

    def test_source_change_extracts_again(self, fake_decoder, tmp_path):
        video = fake_decoder["make_video"]("clip", count=2)
        decoder = DecoderCommand(fake_decoder["command"])
        root = tmp_path / "cache"
        cache.cache_frames(video, SamplingMode.classification(), decoder, root)
        video.write_text(video.read_text() + "\n")  # content change, new fingerprint
        cache.cache_frames(video, SamplingMode.classification(), decoder, root)
        assert self._calls(video) == 2

    def test_incomplete_entry_is_rebuilt(self, fake_decoder, tmp_path):
        video = fake_decoder["make_video"]("clip", count=3)
        decoder = DecoderCommand(fake_decoder["command"])
        root = tmp_path / "cache"
        frames_dir = cache.cache_frames(video, SamplingMode.classification(), decoder, root)
        # simulate a torn extraction: a frame file vanished after meta was written
        next(frames_dir.glob("*.png")).unlink()
        assert not cache.entry_is_valid(frames_dir.parent)
        cache.cache_frames(video, SamplingMode.classification(), decoder, root)
        assert self._calls(video) == 2
        assert len(list(frames_dir.glob("*.png"))) == 3

    def test_missing_meta_invalidates(self, tmp_path):
        entry = tmp_path / "entry"
        (entry / "frames").mkdir(parents=True)
        assert not cache.entry_is_valid(entry)

    def test_invalidate_removes_entry(self, tmp_path):
        entry = tmp_path / "entry"
        (entry / "frames").mkdir(parents=True)
        cache.invalidate(entry)
        assert not entry.exists()
        cache.invalidate(entry)  # idempotent


class TestConfig:
    def test_defaults(self):
        cfg = ScanConfig()
        assert cfg.interval_s == 30.0
        assert cfg.dup_threshold == 0.05
        assert cfg.min_run == 4
        assert cfg.min_ratio == 0.5
        assert cfg.classifier == "marker_oracle"

    def test_file_then_overrides(self, tmp_path):
        cfg_file = tmp_path / "scan.json"
        cfg_file.write_text(json.dumps({"min_run": 2, "interval_s": 10}), encoding="utf-8")
        cfg = build_config(cfg_file, overrides={"min_run": 3, "seed": None})
        assert cfg.min_run == 3  # flag wins over file
        assert cfg.interval_s == 10  # file wins over default
        assert cfg.seed == 0  # None overrides are ignored

    def test_unknown_keys_rejected(self, tmp_path):
        cfg_file = tmp_path / "scan.json"
        cfg_file.write_text(json.dumps({"min_rnu": 2}), encoding="utf-8")
        with pytest.raises(ValueError, match="min_rnu"):
            load_config_file(cfg_file)

    def test_invalid_values_rejected_on_build(self):
        with pytest.raises(ValueError):
            build_config(overrides={"min_ratio": 2.0})
        with pytest.raises(ValueError):
            build_config(overrides={"classifier": "sidecar"})

    def test_hash_is_stable_and_sensitive(self):
        a = config_hash(ScanConfig())
        assert a == config_hash(ScanConfig())
        assert a != config_hash(ScanConfig(min_run=3))
        assert len(a) == 8

    def test_effective_jobs(self):
        assert ScanConfig(jobs=3).effective_jobs() == 3
        assert ScanConfig(jobs=0).effective_jobs() >= 1

    def test_helpers_produce_consistent_objects(self):
        cfg = ScanConfig(interval_s=15, min_run=2, batch_size=4, timeout_s=5)
        assert cfg.decision_params().min_run == 2
        assert cfg.sampling_mode().interval_s == 15
        spec = cfg.classifier_spec()
        assert spec.batch_size == 4 and spec.timeout_s == 5
        assert cfg.decoder_command() is None
