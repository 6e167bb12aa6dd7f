"""Frame image loading and the directory-per-class dataset."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError
from torch.utils.data import Dataset

from .model import CLASS_TO_INDEX

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".tif", ".tiff", ".webp"}


class DataError(ValueError):
    """Raised when a dataset directory does not hold what training needs."""


def load_input(path: str | Path, image_size: int = 300) -> torch.Tensor:
    """Read one image as a 1xHxW float tensor, sized for the model.

    Pixels are scaled to [-1, 1]; the zero-centered range trains far better
    than raw [0, 1] values, whose shared offset swamps the patch projections.
    """
    try:
        with Image.open(path) as img:
            gray = img.convert("L")
            if gray.size != (image_size, image_size):
                gray = gray.resize((image_size, image_size), Image.BILINEAR)
            pixels = np.asarray(gray, dtype=np.float32) / 127.5 - 1.0
    except (OSError, UnidentifiedImageError) as err:
        raise DataError(f"cannot read frame image {path}: {err}") from err
    return torch.from_numpy(pixels).unsqueeze(0)


def list_class_images(root: str | Path) -> dict[str, list[Path]]:
    """Map each class name to its image files under root/<class>/.

    Non-image files are skipped with a warning; a missing or empty class
    directory is an error because training cannot proceed without it.
    """
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"dataset directory not found: {root}")
    by_class: dict[str, list[Path]] = {}
    for name in CLASS_TO_INDEX:
        class_dir = root / name
        if not class_dir.is_dir():
            raise DataError(f"missing class directory {name!r} under {root}")
        files = []
        for entry in sorted(class_dir.iterdir()):
            if entry.is_file() and entry.suffix.lower() in IMAGE_SUFFIXES:
                files.append(entry)
            elif entry.is_file():
                log.warning("skipping non-image file %s", entry)
        if not files:
            raise DataError(f"class directory {class_dir} holds no images")
        by_class[name] = files
    return by_class


class FrameFolder(Dataset):
    """Directory-per-class labeled frames, loaded lazily."""

    def __init__(self, root: str | Path, image_size: int = 300):
        by_class = list_class_images(root)
        self.image_size = image_size
        self.items = [
            (path, CLASS_TO_INDEX[name]) for name in CLASS_TO_INDEX for path in by_class[name]
        ]

    def __len__(self) -> int:
        return len(self.items)

    def __getitem__(self, index: int) -> tuple[torch.Tensor, int]:
        path, target = self.items[index]
        return load_input(path, self.image_size), target
