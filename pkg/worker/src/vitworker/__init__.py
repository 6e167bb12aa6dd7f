"""Vision-transformer frame classifier served over the scanning worker protocol."""

from .data import DataError, FrameFolder, load_input
from .model import CLASS_TO_INDEX, ArtifactError, ModelArtifact, ViTFrameClassifier, load_artifact
from .serve import PROTOCOL_VERSION, classify_frame, serve
from .train import TrainingConfig, fine_tune

__version__ = "0.1.0"

__all__ = [
    "CLASS_TO_INDEX",
    "PROTOCOL_VERSION",
    "ArtifactError",
    "DataError",
    "FrameFolder",
    "ModelArtifact",
    "TrainingConfig",
    "ViTFrameClassifier",
    "classify_frame",
    "fine_tune",
    "load_artifact",
    "load_input",
    "serve",
    "__version__",
]
