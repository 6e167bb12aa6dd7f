"""Serve a fine-tuned artifact over the scanning gateway's wire protocol.

Line-delimited JSON on standard streams: one hello record on startup, one
result or error record per classify request, clean exit on shutdown. A
request that cannot be answered (unreadable frame, missing field) produces
an error record carrying its id; the process itself stays up.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path
from typing import IO

import torch

from .data import load_input
from .model import ModelArtifact, load_artifact

log = logging.getLogger(__name__)

PROTOCOL_VERSION = 1


def classify_frame(artifact: ModelArtifact, frame_path: str | Path) -> tuple[str, float]:
    """Label one frame image; returns (label, softmax confidence)."""
    batch = load_input(frame_path, artifact.model.arch["image_size"]).unsqueeze(0)
    with torch.no_grad():
        probabilities = torch.softmax(artifact.model(batch)[0], dim=0)
        index = int(probabilities.argmax())
    return artifact.label_for_index(index), float(probabilities[index])


def serve(artifact_path: str | Path, stdin: IO[str] | None = None, stdout: IO[str] | None = None) -> int:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout

    artifact = load_artifact(artifact_path)
    artifact.model.eval()

    def emit(record: dict) -> None:
        stdout.write(json.dumps(record) + "\n")
        stdout.flush()

    emit({"type": "hello", "protocol_version": PROTOCOL_VERSION})
    while True:
        line = stdin.readline()
        if not line:
            log.warning("input stream closed without a shutdown record")
            return 0
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError:
            log.warning("ignoring undecodable request line")
            continue
        if not isinstance(request, dict):
            log.warning("ignoring non-object request")
            continue
        kind = request.get("type")
        if kind == "shutdown":
            return 0
        if kind != "classify":
            log.warning("ignoring unsupported request type %r", kind)
            continue
        request_id = request.get("id")
        try:
            label, confidence = classify_frame(artifact, request["frame_path"])
        except Exception as err:  # answer with an error record, keep serving
            emit({"type": "error", "id": request_id, "message": str(err)})
            continue
        emit({"type": "result", "id": request_id, "label": label, "confidence": confidence})
