"""Video manifests: one JSON record per line.

Each record names one video: ``{"video_id": "v1", "source": "clips/v1",
"truth_label": true, "notes": "..."}``. ``source`` may be a frame directory
or a video file; relative paths resolve against the manifest's directory.
``truth_label`` is optional and only needed for evaluation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class ManifestError(ValueError):
    """The manifest file could not be parsed."""


@dataclass(slots=True)
class ManifestEntry:
    video_id: str
    source: Path
    truth_label: bool | None = None
    notes: str = ""


def load_manifest(path: Path | str) -> list[ManifestEntry]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ManifestError(f"cannot read manifest {path}: {err}") from err

    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    base = path.parent
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as err:
            raise ManifestError(f"{path}:{lineno}: invalid JSON record: {err}") from err
        if not isinstance(record, dict):
            raise ManifestError(f"{path}:{lineno}: record must be a JSON object")
        try:
            video_id = str(record["video_id"])
            source = Path(record["source"])
        except KeyError as err:
            raise ManifestError(f"{path}:{lineno}: missing field {err}") from err
        if video_id in seen:
            raise ManifestError(f"{path}:{lineno}: duplicate video_id {video_id!r}")
        seen.add(video_id)
        truth = record.get("truth_label")
        if truth is not None and not isinstance(truth, bool):
            raise ManifestError(f"{path}:{lineno}: truth_label must be true/false/null")
        if not source.is_absolute():
            source = base / source
        entries.append(
            ManifestEntry(
                video_id=video_id,
                source=source,
                truth_label=truth,
                notes=str(record.get("notes", "")),
            )
        )
    return entries


def truth_map(entries: list[ManifestEntry]) -> dict[str, bool]:
    """Truth labels by video id; raises when any entry is unlabeled."""
    missing = [e.video_id for e in entries if e.truth_label is None]
    if missing:
        raise ValueError(f"manifest entries missing truth labels: {missing}")
    return {e.video_id: bool(e.truth_label) for e in entries}
