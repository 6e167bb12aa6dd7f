"""Frame classification boundary: route frames to a configured classifier.

Four classifier kinds share one interface:

- ``worker``: an external child process speaking newline-delimited JSON over
  stdin/stdout (frames passed by file path, never inline pixels),
- ``sidecar``: replay of a precomputed label table,
- ``marker_oracle``: deterministic synthetic ground truth for tests (a frame
  is IDE iff the mean luminance of its top-left 8x8 block exceeds 0.9),
- ``constant``: fixed label.

Wire protocol (one UTF-8 JSON record per line):

    worker -> gateway on start:  {"type":"hello","protocol_version":1}
    gateway -> worker:           {"type":"classify","id":<int>,"frame_path":"<path>"}
                                 {"type":"shutdown"}
    worker -> gateway:           {"type":"result","id":<int>,"label":"ide"|"non_ide",
                                  "confidence":<0..1>}
                                 {"type":"error","id":<int>,"message":"..."}
"""

from __future__ import annotations

import json
import queue
import shlex
import subprocess
import tempfile
import threading
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from PIL import Image

from castscan.frames import GrayFrame, load_frame

IDE = "ide"
NON_IDE = "non_ide"

PROTOCOL_VERSION = 1
MARKER_BLOCK = 8
MARKER_MEAN_THRESHOLD = 0.9

FrameInput = Union[GrayFrame, Path, str]


class ClassifierError(RuntimeError):
    """Base class for classification failures."""


class WorkerSpawnError(ClassifierError):
    """The worker process could not be started."""


class WorkerProtocolError(ClassifierError):
    """The worker violated the wire protocol."""


class WorkerTimeoutError(ClassifierError):
    """The worker did not answer within its deadline."""


class WorkerCrashError(ClassifierError):
    """The worker process died mid-session."""


class SidecarLookupError(ClassifierError):
    """A frame has no entry in the sidecar label table."""


@dataclass(frozen=True, slots=True)
class FrameLabel:
    """IDE / non-IDE decision for one frame."""

    label: str  # "ide" | "non_ide"
    confidence: float = 1.0

    def __post_init__(self) -> None:
        if self.label not in (IDE, NON_IDE):
            raise ValueError(f"unknown label {self.label!r}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must lie in [0, 1], got {self.confidence}")

    @property
    def is_ide(self) -> bool:
        return self.label == IDE


@dataclass(slots=True)
class ClassifierSpec:
    """Which classifier to use and how to talk to it."""

    kind: str  # "worker" | "sidecar" | "marker_oracle" | "constant"
    command: str | None = None
    sidecar_path: Path | None = None
    constant_label: FrameLabel | None = None
    timeout_s: float = 30.0
    batch_size: int = 8

    def validate(self) -> None:
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        required = {
            "worker": self.command is not None,
            "sidecar": self.sidecar_path is not None,
            "marker_oracle": True,
            "constant": self.constant_label is not None,
        }
        if self.kind not in required:
            raise ValueError(f"unknown classifier kind: {self.kind!r}")
        if not required[self.kind]:
            raise ValueError(f"classifier kind {self.kind!r} is missing its argument")
        extras = {
            "worker": self.sidecar_path is None and self.constant_label is None,
            "sidecar": self.command is None and self.constant_label is None,
            "marker_oracle": self.command is None
            and self.sidecar_path is None
            and self.constant_label is None,
            "constant": self.command is None and self.sidecar_path is None,
        }
        if not extras[self.kind]:
            raise ValueError(f"classifier kind {self.kind!r} has fields of another kind set")

    @classmethod
    def parse(cls, text: str, timeout_s: float = 30.0, batch_size: int = 8) -> ClassifierSpec:
        """Parse the CLI form ``kind[:arg]``.

        Examples: ``marker_oracle``, ``constant:ide``, ``sidecar:labels.json``,
        ``worker:python -m vitworker serve --model m.pt``.
        """
        kind, _, arg = text.partition(":")
        kind = kind.strip()
        if kind == "marker_oracle":
            spec = cls(kind=kind, timeout_s=timeout_s, batch_size=batch_size)
        elif kind == "constant":
            label = arg.strip() or IDE
            spec = cls(
                kind=kind,
                constant_label=FrameLabel(label=label),
                timeout_s=timeout_s,
                batch_size=batch_size,
            )
        elif kind == "sidecar":
            if not arg:
                raise ValueError("sidecar classifier needs a label table path")
            spec = cls(kind=kind, sidecar_path=Path(arg), timeout_s=timeout_s, batch_size=batch_size)
        elif kind == "worker":
            if not arg:
                raise ValueError("worker classifier needs a command line")
            spec = cls(kind=kind, command=arg, timeout_s=timeout_s, batch_size=batch_size)
        else:
            raise ValueError(f"unknown classifier kind: {kind!r}")
        spec.validate()
        return spec


def _chunks(items: Sequence, size: int):
    for i in range(0, len(items), size):
        yield items[i : i + size]


class FrameClassifier:
    """Shared classify/classify_batch surface; subclasses label one frame or chunk."""

    def __init__(self, spec: ClassifierSpec):
        spec.validate()
        self.spec = spec

    def classify(self, frame: FrameInput) -> FrameLabel:
        return self._classify_chunk([frame])[0]

    def classify_batch(self, frames: Sequence[FrameInput]) -> list[FrameLabel]:
        """Label frames in order; chunks of ``batch_size`` form one request each."""
        if not frames:
            raise ValueError("classify_batch needs at least one frame")
        labels: list[FrameLabel] = []
        for chunk in _chunks(list(frames), self.spec.batch_size):
            labels.extend(self._classify_chunk(chunk))
        return labels

    def _classify_chunk(self, chunk: list[FrameInput]) -> list[FrameLabel]:
        return [self._classify_one(f) for f in chunk]

    def _classify_one(self, frame: FrameInput) -> FrameLabel:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self) -> FrameClassifier:
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class ConstantClassifier(FrameClassifier):
    def _classify_one(self, frame: FrameInput) -> FrameLabel:
        return self.spec.constant_label


class MarkerOracleClassifier(FrameClassifier):
    """Synthetic ground truth keyed on a bright top-left corner block."""

    def _classify_one(self, frame: FrameInput) -> FrameLabel:
        if not isinstance(frame, GrayFrame):
            frame = load_frame(frame)
        block = frame.pixels[:MARKER_BLOCK, :MARKER_BLOCK]
        is_ide = block.size > 0 and float(block.mean()) > MARKER_MEAN_THRESHOLD
        return FrameLabel(label=IDE if is_ide else NON_IDE, confidence=1.0)


class SidecarClassifier(FrameClassifier):
    """Replay labels from a JSON table.

    Keys may be frame indices (as strings), file names, or file stems. Values
    are ``"ide"``/``"non_ide"`` or ``{"label": ..., "confidence": ...}``.
    """

    def __init__(self, spec: ClassifierSpec):
        super().__init__(spec)
        try:
            raw = json.loads(Path(spec.sidecar_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as err:
            raise ClassifierError(f"cannot read sidecar table {spec.sidecar_path}: {err}") from err
        if not isinstance(raw, dict):
            raise ClassifierError(f"sidecar table {spec.sidecar_path} must be a JSON object")
        self.table: dict[str, FrameLabel] = {}
        for key, value in raw.items():
            if isinstance(value, dict):
                self.table[str(key)] = FrameLabel(
                    label=value["label"], confidence=float(value.get("confidence", 1.0))
                )
            else:
                self.table[str(key)] = FrameLabel(label=str(value))

    def _keys_for(self, frame: FrameInput) -> list[str]:
        keys: list[str] = []
        if isinstance(frame, GrayFrame):
            keys.append(str(frame.index))
            if frame.source_path is not None:
                keys += [frame.source_path.name, frame.source_path.stem]
        else:
            path = Path(frame)
            keys += [path.name, path.stem, str(path)]
        return keys

    def _classify_one(self, frame: FrameInput) -> FrameLabel:
        keys = self._keys_for(frame)
        for key in keys:
            if key in self.table:
                return self.table[key]
        raise SidecarLookupError(f"no sidecar entry for frame (tried keys {keys})")


def _frame_path(frame: FrameInput, scratch_dir: Path) -> Path:
    """Resolve the on-disk path a worker should read for this frame."""
    if isinstance(frame, GrayFrame):
        if frame.source_path is not None:
            return frame.source_path
        scratch_dir.mkdir(parents=True, exist_ok=True)
        out = scratch_dir / f"frame-{frame.index}-{frame.timestamp_s:g}.png"
        arr = np.clip(frame.pixels * 255.0, 0, 255).astype(np.uint8)
        Image.fromarray(arr, mode="L").save(out)
        return out
    return Path(frame)


class WorkerSession:
    """One live worker process: spawn, handshake, correlated requests, shutdown."""

    def __init__(self, spec: ClassifierSpec):
        self.spec = spec
        self._lock = threading.Lock()
        self._next_id = 0
        self._stderr_tail: deque[str] = deque(maxlen=50)
        argv = shlex.split(spec.command)
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as err:
            raise WorkerSpawnError(f"cannot start worker {argv[0]!r}: {err}") from err
        self._lines: queue.Queue[str | None] = queue.Queue()
        threading.Thread(target=self._read_stdout, daemon=True).start()
        threading.Thread(target=self._read_stderr, daemon=True).start()
        self._handshake()

    # -- process plumbing ---------------------------------------------------

    def _read_stdout(self) -> None:
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)  # EOF sentinel

    def _read_stderr(self) -> None:
        for line in self._proc.stderr:
            self._stderr_tail.append(line.rstrip("\n"))

    def _diagnostics(self) -> str:
        tail = "\n".join(self._stderr_tail)
        return f" (worker stderr tail:\n{tail})" if tail else ""

    def _next_line(self, timeout_s: float, waiting_for: str) -> dict:
        try:
            line = self._lines.get(timeout=timeout_s)
        except queue.Empty:
            raise WorkerTimeoutError(
                f"worker silent for {timeout_s:g}s while waiting for {waiting_for}"
                + self._diagnostics()
            ) from None
        if line is None:
            raise WorkerCrashError(
                f"worker closed its stdout while the gateway awaited {waiting_for}"
                + self._diagnostics()
            )
        line = line.strip()
        if not line:
            return self._next_line(timeout_s, waiting_for)
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as err:
            raise WorkerProtocolError(f"worker sent a non-JSON line: {line!r}") from err
        if not isinstance(msg, dict):
            raise WorkerProtocolError(f"worker sent a non-object record: {line!r}")
        return msg

    def _send(self, record: dict) -> None:
        try:
            self._proc.stdin.write(json.dumps(record) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as err:
            raise WorkerCrashError(f"worker stdin closed: {err}{self._diagnostics()}") from err

    def _handshake(self) -> None:
        try:
            msg = self._next_line(self.spec.timeout_s, "the hello handshake")
        except WorkerCrashError as err:
            raise WorkerProtocolError(f"no hello handshake: {err}") from err
        if msg.get("type") != "hello":
            raise WorkerProtocolError(f"expected hello handshake, got {msg!r}")
        version = msg.get("protocol_version")
        if version != PROTOCOL_VERSION:
            raise WorkerProtocolError(
                f"worker speaks protocol version {version!r}, gateway requires {PROTOCOL_VERSION}"
            )

    # -- requests -------------------------------------------------------------

    def request(self, paths: Sequence[Path]) -> list[FrameLabel]:
        """Send one classify record per path as a single request; collect results.

        Results may arrive out of order; they are matched up by correlation id
        and returned in input order. Any error record fails the whole request,
        naming the offending frame.
        """
        with self._lock:
            by_id: dict[int, Path] = {}
            for path in paths:
                req_id = self._next_id
                self._next_id += 1
                by_id[req_id] = path
                self._send({"type": "classify", "id": req_id, "frame_path": str(path)})
            results: dict[int, FrameLabel] = {}
            while len(results) < len(by_id):
                pending = [str(p) for i, p in by_id.items() if i not in results]
                msg = self._next_line(self.spec.timeout_s, f"results for {', '.join(pending)}")
                msg_type = msg.get("type")
                if msg_type == "error":
                    frame = by_id.get(msg.get("id"), "<unknown frame>")
                    raise ClassifierError(
                        f"worker failed on frame {frame}: {msg.get('message', '')}"
                    )
                if msg_type != "result":
                    raise WorkerProtocolError(f"unexpected record {msg!r}")
                req_id = msg.get("id")
                if req_id not in by_id:
                    raise WorkerProtocolError(f"result for unknown request id {req_id!r}")
                if req_id in results:
                    raise WorkerProtocolError(f"duplicate result for request id {req_id!r}")
                try:
                    results[req_id] = FrameLabel(
                        label=msg["label"], confidence=float(msg.get("confidence", 1.0))
                    )
                except (KeyError, TypeError, ValueError) as err:
                    raise WorkerProtocolError(f"malformed result {msg!r}: {err}") from err
            return [results[i] for i in by_id]

    def alive(self) -> bool:
        return self._proc.poll() is None

    def close(self) -> None:
        """Ask the worker to exit; escalate to kill if it lingers."""
        if self._proc.poll() is None:
            try:
                self._send({"type": "shutdown"})
            except WorkerCrashError:
                pass
            try:
                self._proc.wait(timeout=self.spec.timeout_s)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
        for stream in (self._proc.stdin, self._proc.stdout, self._proc.stderr):
            if stream:
                try:
                    stream.close()
                except OSError:
                    pass


def spawn_worker(spec: ClassifierSpec) -> WorkerSession:
    """Start a worker process and complete the hello handshake."""
    if spec.kind != "worker":
        raise ValueError(f"spawn_worker needs a worker spec, got kind {spec.kind!r}")
    spec.validate()
    return WorkerSession(spec)


class WorkerClassifier(FrameClassifier):
    """Gateway side of the external worker protocol.

    One session serializes wire requests; a crashed worker is restarted once,
    after which the failure is hard. ``requests_sent`` counts wire requests
    (one per chunk) for diagnostics and tests.
    """

    def __init__(self, spec: ClassifierSpec):
        super().__init__(spec)
        self._session: WorkerSession | None = None
        self._restarted = False
        self._scratch = Path(tempfile.mkdtemp(prefix="castscan-frames-"))
        self.requests_sent = 0

    def _ensure_session(self) -> WorkerSession:
        if self._session is None or not self._session.alive():
            self._session = spawn_worker(self.spec)
        return self._session

    def _classify_chunk(self, chunk: list[FrameInput]) -> list[FrameLabel]:
        paths = [_frame_path(f, self._scratch) for f in chunk]
        session = self._ensure_session()
        self.requests_sent += 1
        try:
            return session.request(paths)
        except WorkerCrashError as err:
            if self._restarted:
                raise WorkerCrashError(f"worker crashed again after a restart: {err}") from err
            self._restarted = True
            self._session = None
            session = self._ensure_session()
            self.requests_sent += 1
            try:
                return session.request(paths)
            except WorkerCrashError as err2:
                raise WorkerCrashError(
                    f"worker crashed again after a restart: {err2}"
                ) from err2

    def close(self) -> None:
        if self._session is not None:
            self._session.close()
            self._session = None


def make_classifier(spec: ClassifierSpec) -> FrameClassifier:
    """Build the classifier matching the spec's kind."""
    spec.validate()
    return {
        "constant": ConstantClassifier,
        "marker_oracle": MarkerOracleClassifier,
        "sidecar": SidecarClassifier,
        "worker": WorkerClassifier,
    }[spec.kind](spec)
