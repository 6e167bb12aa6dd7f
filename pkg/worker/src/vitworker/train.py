"""Fine-tuning loop that produces a servable model artifact."""

from __future__ import annotations

import logging
import random
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch
from torch.utils.data import DataLoader

from .data import FrameFolder
from .model import ARCH_FIELDS, CLASS_TO_INDEX, ArtifactError, ModelArtifact, ViTFrameClassifier

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainingConfig:
    """Inputs to fine_tune; the defaults suit small labeled frame sets."""

    train_dir: Path
    val_dir: Path
    max_iterations: int = 100
    learning_rate: float = 3e-3
    batch_size: int = 32
    image_size: int = 300
    patch_size: int = 30
    num_layers: int = 2
    num_heads: int = 4
    hidden_dim: int = 64
    mlp_dim: int = 128
    seed: int = 0
    pretrained_checkpoint: Path | None = None

    def validate(self) -> None:
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.image_size < 1 or self.patch_size < 1 or self.image_size % self.patch_size:
            raise ValueError(
                f"image_size {self.image_size} must be a positive multiple of "
                f"patch_size {self.patch_size}"
            )


def _seed_everything(seed: int) -> torch.Generator:
    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)
    loader_rng = torch.Generator()
    loader_rng.manual_seed(seed)
    return loader_rng


def _load_pretrained(model: ViTFrameClassifier, checkpoint: Path) -> None:
    try:
        payload = torch.load(checkpoint, map_location="cpu", weights_only=False)
    except Exception as err:
        raise ArtifactError(f"cannot load pretrained checkpoint {checkpoint}: {err}") from err
    state = payload.get("state_dict", payload) if isinstance(payload, dict) else payload
    try:
        # tolerate a missing classifier head; everything else must line up
        result = model.load_state_dict(state, strict=False)
    except RuntimeError as err:
        raise ArtifactError(
            f"pretrained checkpoint {checkpoint} does not match the configured "
            f"architecture: {err}"
        ) from err
    log.info(
        "loaded pretrained weights from %s (%d missing, %d unexpected keys)",
        checkpoint,
        len(result.missing_keys),
        len(result.unexpected_keys),
    )


def _accuracy(model: ViTFrameClassifier, loader: DataLoader) -> float:
    model.eval()
    hits = 0
    total = 0
    with torch.no_grad():
        for frames, targets in loader:
            predictions = model(frames).argmax(dim=1)
            hits += int((predictions == targets).sum())
            total += len(targets)
    return hits / total if total else 0.0


def fine_tune(config: TrainingConfig) -> ModelArtifact:
    """Train on the labeled frame folders and return the resulting artifact.

    Runs exactly max_iterations optimizer steps (cycling the shuffled training
    set as needed), then measures accuracy on the held-out folder. Fully
    deterministic for a fixed config and seed.
    """
    config.validate()
    loader_rng = _seed_everything(config.seed)

    train_set = FrameFolder(config.train_dir, image_size=config.image_size)
    val_set = FrameFolder(config.val_dir, image_size=config.image_size)

    model = ViTFrameClassifier(**{f: getattr(config, f) for f in ARCH_FIELDS})
    if config.pretrained_checkpoint is not None:
        _load_pretrained(model, config.pretrained_checkpoint)

    loader = DataLoader(
        train_set, batch_size=config.batch_size, shuffle=True, generator=loader_rng
    )
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    loss_fn = torch.nn.CrossEntropyLoss()

    started = time.perf_counter()
    model.train()
    steps = 0
    while steps < config.max_iterations:
        for frames, targets in loader:
            optimizer.zero_grad()
            loss = loss_fn(model(frames), targets)
            loss.backward()
            optimizer.step()
            steps += 1
            if steps >= config.max_iterations:
                break
    elapsed = time.perf_counter() - started

    accuracy = _accuracy(model, DataLoader(val_set, batch_size=config.batch_size))
    log.info("fine-tune finished: %d steps in %.1fs, val accuracy %.4f", steps, elapsed, accuracy)

    snapshot = {
        key: (str(value) if isinstance(value, Path) else value)
        for key, value in asdict(config).items()
    }
    metadata = {
        "config": snapshot,
        "steps_run": steps,
        "train_frames": len(train_set),
        "val_frames": len(val_set),
        "val_accuracy": accuracy,
        "train_seconds": round(elapsed, 3),
    }
    return ModelArtifact(model=model, classes=dict(CLASS_TO_INDEX), metadata=metadata)
