"""Decoded-frame cache for video-file sources.

Entries are keyed by (source content hash, sampling mode), so a re-run on an
unchanged video performs zero decoder invocations, while any change to the
file or the sampling parameters re-extracts. Each entry holds a ``frames/``
directory plus a ``meta.json`` written only after a complete extraction.
"""

from __future__ import annotations

import hashlib
import json
import shutil
from pathlib import Path

from castscan.frames import DecoderCommand, SamplingMode, list_image_files

META_NAME = "meta.json"


def source_fingerprint(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def entry_dir(cache_root: Path, fingerprint: str, mode: SamplingMode) -> Path:
    return cache_root / f"{fingerprint[:16]}-{mode.key()}"


def entry_is_valid(entry: Path) -> bool:
    meta_path = entry / META_NAME
    frames_dir = entry / "frames"
    if not meta_path.is_file() or not frames_dir.is_dir():
        return False
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError):
        return False
    if not meta.get("complete"):
        return False
    return meta.get("frame_count") == len(list_image_files(frames_dir))


def invalidate(entry: Path) -> None:
    shutil.rmtree(entry, ignore_errors=True)


def cache_frames(
    source: Path,
    mode: SamplingMode,
    decoder: DecoderCommand,
    cache_root: Path,
) -> Path:
    """Return the directory of decoded frames, extracting only on a miss."""
    cache_root = Path(cache_root)
    cache_root.mkdir(parents=True, exist_ok=True)
    fingerprint = source_fingerprint(source)
    entry = entry_dir(cache_root, fingerprint, mode)
    frames_dir = entry / "frames"

    if entry_is_valid(entry):
        return frames_dir

    invalidate(entry)
    frames_dir.mkdir(parents=True)
    decoder.run(source, mode.interval_s, frames_dir)
    meta = {
        "source": str(source),
        "fingerprint": fingerprint,
        "mode": mode.key(),
        "frame_count": len(list_image_files(frames_dir)),
        "complete": True,
    }
    (entry / META_NAME).write_text(json.dumps(meta, indent=2), encoding="utf-8")
    return frames_dir
