"""Run configuration: defaults, config file, and command-line flags.

The config file is a single flat JSON object whose keys mirror the dataclass
fields below; every key can also be set by a command-line flag, and flags
win over the file, which wins over defaults.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, fields
from pathlib import Path

from castscan.classifier import ClassifierSpec
from castscan.decision import DecisionParams
from castscan.frames import DecoderCommand, SamplingMode


@dataclass(slots=True)
class ScanConfig:
    interval_s: float = 30.0
    dup_threshold: float = 0.05
    min_run: int = 4
    min_ratio: float = 0.5
    classifier: str = "marker_oracle"
    seed: int = 0
    jobs: int = 0  # 0 means one per logical CPU
    cache_dir: str = ".castscan-cache"
    decoder: str | None = None
    timeout_s: float = 30.0
    batch_size: int = 8

    def validate(self) -> None:
        self.decision_params().validate()
        self.classifier_spec().validate()
        if self.jobs < 0:
            raise ValueError("jobs must be >= 0")

    def decision_params(self) -> DecisionParams:
        return DecisionParams(
            min_run=self.min_run,
            min_ratio=self.min_ratio,
            dup_threshold=self.dup_threshold,
            interval_s=self.interval_s,
        )

    def sampling_mode(self) -> SamplingMode:
        mode = SamplingMode.classification(interval_s=self.interval_s)
        mode.seed = self.seed
        return mode

    def classifier_spec(self) -> ClassifierSpec:
        return ClassifierSpec.parse(
            self.classifier, timeout_s=self.timeout_s, batch_size=self.batch_size
        )

    def decoder_command(self) -> DecoderCommand | None:
        return DecoderCommand(self.decoder) if self.decoder else None

    def effective_jobs(self) -> int:
        return self.jobs if self.jobs > 0 else (os.cpu_count() or 1)

    def to_record(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def load_config_file(path: Path | str) -> dict:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as err:
        raise ValueError(f"cannot read config {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ValueError(f"config {path} is not valid JSON: {err}") from err
    if not isinstance(raw, dict):
        raise ValueError(f"config {path} must be a flat JSON object")
    known = {f.name for f in fields(ScanConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ValueError(f"config {path} has unknown keys: {unknown}")
    return raw


def build_config(
    config_path: Path | str | None = None,
    overrides: dict | None = None,
) -> ScanConfig:
    """Merge defaults < config file < flag overrides (None values ignored)."""
    values: dict = {}
    if config_path is not None:
        values.update(load_config_file(config_path))
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    cfg = ScanConfig(**values)
    cfg.validate()
    return cfg


def config_hash(cfg: ScanConfig) -> str:
    """Short stable digest of the effective configuration, used in report names."""
    canonical = json.dumps(cfg.to_record(), sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:8]
