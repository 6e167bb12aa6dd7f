"""Shared fixtures: one fine-tuned artifact and a worker-subprocess factory."""

from __future__ import annotations

from pathlib import Path

import pytest

from markerdata import WorkerProc, build_class_dirs
from vitworker.train import TrainingConfig, fine_tune


@pytest.fixture(scope="session")
def trained_artifact(tmp_path_factory) -> Path:
    """One properly fine-tuned artifact shared by the serving tests."""
    root = tmp_path_factory.mktemp("model")
    build_class_dirs(root / "train", 200, seed=11)
    build_class_dirs(root / "val", 60, seed=12)
    artifact = fine_tune(TrainingConfig(train_dir=root / "train", val_dir=root / "val"))
    # downstream label assertions presume the model actually learned the marker
    assert artifact.metadata["val_accuracy"] >= 0.95
    return artifact.save(root / "marker.pt")


@pytest.fixture()
def worker_factory(trained_artifact):
    spawned: list[WorkerProc] = []

    def spawn(artifact: Path | None = None) -> WorkerProc:
        worker = WorkerProc(artifact or trained_artifact)
        spawned.append(worker)
        return worker

    yield spawn
    for worker in spawned:
        worker.kill()
