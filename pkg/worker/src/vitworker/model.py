"""Model assembly and artifact (de)serialization."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any

import torch
from torch import nn
from torchvision.models import VisionTransformer

ARTIFACT_FORMAT = "vitworker-artifact/1"

# the two labels the scanning gateway understands, in index order
CLASS_TO_INDEX = {"ide": 0, "non_ide": 1}

ARCH_FIELDS = ("image_size", "patch_size", "num_layers", "num_heads", "hidden_dim", "mlp_dim")


class ArtifactError(ValueError):
    """Raised when a model artifact cannot be loaded or is malformed."""


class ViTFrameClassifier(nn.Module):
    """A vision transformer over single-channel frame tensors.

    Frames arrive as Bx1xHxW grayscale batches; the channel is expanded to
    the three-channel input the backbone expects, so checkpoints from
    RGB-pretrained transformers of the same geometry remain loadable.
    """

    def __init__(
        self,
        image_size: int = 300,
        patch_size: int = 30,
        num_layers: int = 2,
        num_heads: int = 4,
        hidden_dim: int = 64,
        mlp_dim: int = 128,
    ):
        super().__init__()
        self.arch = {
            "image_size": image_size,
            "patch_size": patch_size,
            "num_layers": num_layers,
            "num_heads": num_heads,
            "hidden_dim": hidden_dim,
            "mlp_dim": mlp_dim,
        }
        self.backbone = VisionTransformer(
            image_size=image_size,
            patch_size=patch_size,
            num_layers=num_layers,
            num_heads=num_heads,
            hidden_dim=hidden_dim,
            mlp_dim=mlp_dim,
            num_classes=len(CLASS_TO_INDEX),
        )

    def forward(self, frames: torch.Tensor) -> torch.Tensor:
        return self.backbone(frames.expand(-1, 3, -1, -1))


@dataclass
class ModelArtifact:
    """A fine-tuned model plus everything needed to serve it."""

    model: ViTFrameClassifier
    classes: dict[str, int]
    metadata: dict[str, Any]

    def __post_init__(self):
        if set(self.classes) != set(CLASS_TO_INDEX):
            raise ArtifactError(
                f"class mapping must be exactly {sorted(CLASS_TO_INDEX)}, got {sorted(self.classes)}"
            )

    def label_for_index(self, index: int) -> str:
        for label, class_index in self.classes.items():
            if class_index == index:
                return label
        raise ArtifactError(f"no label mapped to class index {index}")

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        torch.save(
            {
                "format": ARTIFACT_FORMAT,
                "arch": dict(self.model.arch),
                "state_dict": self.model.state_dict(),
                "classes": dict(self.classes),
                "metadata": self.metadata,
            },
            path,
        )
        return path


def load_artifact(path: str | Path) -> ModelArtifact:
    path = Path(path)
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except FileNotFoundError:
        raise ArtifactError(f"artifact not found: {path}") from None
    except Exception as err:
        raise ArtifactError(f"cannot load artifact {path}: {err}") from err
    if not isinstance(payload, dict) or payload.get("format") != ARTIFACT_FORMAT:
        raise ArtifactError(f"{path} is not a {ARTIFACT_FORMAT} artifact")
    arch = payload.get("arch", {})
    missing = [f for f in ARCH_FIELDS if f not in arch]
    if missing:
        raise ArtifactError(f"artifact {path} lacks architecture fields: {missing}")
    model = ViTFrameClassifier(**{f: arch[f] for f in ARCH_FIELDS})
    try:
        model.load_state_dict(payload["state_dict"])
    except (KeyError, RuntimeError) as err:
        raise ArtifactError(f"artifact {path} weights do not match its architecture: {err}") from err
    model.eval()
    return ModelArtifact(model=model, classes=payload["classes"], metadata=payload.get("metadata", {}))
