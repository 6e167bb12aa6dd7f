"""Frame acquisition: decode, normalize, and sample frames from a video source.

Sources are either a directory of timestamp-named images (``frame_<seconds>``)
or a video file paired with an external decoder command that dumps numbered
frames into a directory. All frames are normalized to 300x300 grayscale with
luminance in [0, 1] so every later stage sees one representation.
"""

from __future__ import annotations

import math
import random
import re
import shlex
import subprocess
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

NORMALIZED_SIZE = 300
IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}

CLASSIFICATION_INTERVAL_S = 30.0
TRAINING_INTERVAL_S = 1.0
TRAINING_CAP = 600

_FRAME_NAME = re.compile(r"^frame[_-](\d+(?:\.\d+)?)$")
_DIGITS = re.compile(r"(\d+)")


class DecodeError(RuntimeError):
    """An image file or video source could not be decoded."""


class EmptySourceError(DecodeError):
    """A source yielded no frames at all."""


@dataclass(slots=True, eq=False)
class GrayFrame:
    """Normalized grayscale raster plus its position in the sampled sequence."""

    width: int
    height: int
    pixels: np.ndarray  # shape (height, width), float64 luminance in [0, 1]
    timestamp_s: float
    index: int
    source_path: Path | None = None

    def validate(self) -> None:
        if self.pixels.shape != (self.height, self.width):
            raise ValueError(
                f"pixel buffer shape {self.pixels.shape} does not match "
                f"{self.height}x{self.width}"
            )
        if self.pixels.size and (self.pixels.min() < 0.0 or self.pixels.max() > 1.0):
            raise ValueError("luminance values must lie in [0, 1]")


@dataclass(slots=True)
class SamplingMode:
    """How frames are drawn from a source.

    Classification mode samples sparsely (default one frame per 30 s) and
    ignores the cap. Training mode samples densely (default 1 fps) and keeps
    at most ``cap`` frames via seeded uniform random selection.
    """

    kind: str  # "classification" | "training"
    interval_s: float
    cap: int = TRAINING_CAP
    seed: int = 0

    @classmethod
    def classification(cls, interval_s: float = CLASSIFICATION_INTERVAL_S) -> SamplingMode:
        return cls(kind="classification", interval_s=interval_s)

    @classmethod
    def training(
        cls,
        interval_s: float = TRAINING_INTERVAL_S,
        cap: int = TRAINING_CAP,
        seed: int = 0,
    ) -> SamplingMode:
        return cls(kind="training", interval_s=interval_s, cap=cap, seed=seed)

    def validate(self) -> None:
        if self.kind not in ("classification", "training"):
            raise ValueError(f"unknown sampling mode kind: {self.kind!r}")
        if self.interval_s <= 0:
            raise ValueError("interval_s must be positive")
        if self.cap <= 0:
            raise ValueError("cap must be positive")

    def key(self) -> str:
        """Stable string identifying this mode, used in cache keys."""
        if self.kind == "classification":
            return f"classification-i{self.interval_s:g}"
        return f"training-i{self.interval_s:g}-c{self.cap}-s{self.seed}"


@dataclass(slots=True)
class SampledSequence:
    """Ordered frames sampled from one video."""

    video_id: str
    frames: list[GrayFrame]
    mode: SamplingMode

    def validate(self) -> None:
        for i, frame in enumerate(self.frames):
            if frame.index != i:
                raise ValueError(f"frame index {frame.index} at position {i}")
            if i and frame.timestamp_s <= self.frames[i - 1].timestamp_s:
                raise ValueError("timestamps must be strictly increasing")


def sample_schedule(duration_s: float, interval_s: float) -> list[float]:
    """Sampling instants 0, interval, 2*interval, ... up to duration_s.

    Duration 0 still yields [0.0] so trivially short inputs stay classifiable.
    """
    if interval_s <= 0:
        raise ValueError("interval_s must be positive")
    if duration_s < 0:
        raise ValueError("duration_s must be non-negative")
    # epsilon absorbs float noise so e.g. 0.3/0.1 still includes the endpoint
    count = int(math.floor(duration_s / interval_s + 1e-9)) + 1
    return [k * interval_s for k in range(count)]


def load_frame(image_path: Path | str, timestamp_s: float = 0.0, index: int = 0) -> GrayFrame:
    """Decode an image into a normalized 300x300 grayscale frame.

    Grayscale uses ITU-R BT.601 luminance weights (PIL mode "L"); inputs that
    are already 300x300 grayscale pass through with pixel values unchanged.
    """
    path = Path(image_path)
    try:
        with Image.open(path) as img:
            if img.mode != "L":
                img = img.convert("L")
            if img.size != (NORMALIZED_SIZE, NORMALIZED_SIZE):
                img = img.resize((NORMALIZED_SIZE, NORMALIZED_SIZE), Image.BILINEAR)
            pixels = np.asarray(img, dtype=np.float64) / 255.0
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as err:
        raise DecodeError(f"cannot decode image {path}: {err}") from err
    return GrayFrame(
        width=NORMALIZED_SIZE,
        height=NORMALIZED_SIZE,
        pixels=pixels,
        timestamp_s=timestamp_s,
        index=index,
        source_path=path,
    )


def _natural_key(path: Path) -> tuple:
    return tuple(int(tok) if tok.isdigit() else tok for tok in _DIGITS.split(path.name))


def list_image_files(directory: Path) -> list[Path]:
    return sorted(
        (p for p in directory.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES),
        key=_natural_key,
    )


def enumerate_candidates(
    directory: Path | str,
    interval_s: float,
    naming: str = "auto",
) -> list[tuple[float, Path]]:
    """List (timestamp, path) pairs for every image in a frame directory.

    ``naming="auto"`` reads timestamps from ``frame_<seconds>`` file names when
    every file matches, otherwise falls back to ordinal spacing (position x
    interval). ``naming="ordinal"`` forces the even-spacing assumption, which
    is what decoder-produced dumps use.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise DecodeError(f"frame directory not found: {directory}")
    files = list_image_files(directory)
    if not files:
        return []

    if naming == "auto":
        stamps = [_FRAME_NAME.match(p.stem) for p in files]
        if all(stamps):
            pairs = [(float(m.group(1)), p) for m, p in zip(stamps, files)]
            pairs.sort(key=lambda item: item[0])
            return pairs
        naming = "ordinal"
    if naming != "ordinal":
        raise ValueError(f"unknown naming scheme: {naming!r}")
    return [(i * interval_s, p) for i, p in enumerate(files)]


def select_samples(
    candidates: list[tuple[float, Path]],
    mode: SamplingMode,
) -> list[tuple[float, Path]]:
    """Pick candidate frames at the mode's sampling instants, then cap.

    Each schedule instant takes the nearest candidate by timestamp (earlier
    wins ties); repeated picks collapse to one. In training mode, an overfull
    selection is reduced to exactly ``cap`` frames by seeded uniform random
    choice and re-sorted by timestamp.
    """
    mode.validate()
    if not candidates:
        return []

    duration = candidates[-1][0]
    schedule = sample_schedule(duration, mode.interval_s)
    stamps = [ts for ts, _ in candidates]

    picked: list[tuple[float, Path]] = []
    last_idx = -1
    cursor = 0
    for instant in schedule:
        while cursor + 1 < len(stamps) and stamps[cursor + 1] <= instant:
            cursor += 1
        best = cursor
        if cursor + 1 < len(stamps):
            if abs(stamps[cursor + 1] - instant) < abs(instant - stamps[cursor]):
                best = cursor + 1
        if best != last_idx:
            picked.append(candidates[best])
            last_idx = best

    if mode.kind == "training" and len(picked) > mode.cap:
        rng = random.Random(mode.seed)
        keep = sorted(rng.sample(range(len(picked)), mode.cap))
        picked = [picked[i] for i in keep]
    return picked


def load_sequence(
    selected: list[tuple[float, Path]],
    mode: SamplingMode,
    video_id: str = "",
) -> SampledSequence:
    """Decode selected frames and assemble the indexed sequence."""
    frames = [
        load_frame(path, timestamp_s=ts, index=i) for i, (ts, path) in enumerate(selected)
    ]
    seq = SampledSequence(video_id=video_id, frames=frames, mode=mode)
    seq.validate()
    return seq


@dataclass(slots=True)
class DecoderCommand:
    """External frame extractor invoked as a command template.

    The template is tokenized with shlex and the placeholders ``{input}``,
    ``{fps}``, and ``{outdir}`` are substituted per token, so paths with
    spaces survive. The tool must write numbered image files into {outdir}.
    Reference config: ``ffmpeg -loglevel error -i {input} -vf fps={fps}
    {outdir}/frame_%06d.png``.
    """

    template: str

    def build(self, input_path: Path, fps: float, outdir: Path) -> list[str]:
        tokens = shlex.split(self.template)
        subs = {"input": str(input_path), "fps": f"{fps:.6g}", "outdir": str(outdir)}
        return [tok.format(**subs) for tok in tokens]

    def run(self, input_path: Path, interval_s: float, outdir: Path) -> None:
        outdir.mkdir(parents=True, exist_ok=True)
        argv = self.build(input_path, 1.0 / interval_s, outdir)
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, check=False)
        except OSError as err:
            raise DecodeError(f"decoder failed to start ({argv[0]}): {err}") from err
        if proc.returncode != 0:
            raise DecodeError(
                f"decoder exited with status {proc.returncode} for {input_path}\n"
                f"command: {' '.join(argv)}\n"
                f"stderr: {proc.stderr.strip()[-2000:]}"
            )


def acquire_frames(
    source: Path | str,
    mode: SamplingMode,
    decoder: DecoderCommand | None = None,
    video_id: str | None = None,
    workdir: Path | str | None = None,
) -> SampledSequence:
    """Sample frames from a directory source or a video file.

    Directory sources are used as-is; video files require a decoder command
    and a writable ``workdir`` for the extracted frames. Identical
    (source, mode) inputs yield identical sequences.
    """
    source = Path(source)
    vid = video_id if video_id is not None else source.stem

    if source.is_dir():
        candidates = enumerate_candidates(source, mode.interval_s, naming="auto")
    elif source.is_file():
        if decoder is None:
            raise ValueError(f"video file source {source} requires a decoder command")
        outdir = Path(workdir) if workdir is not None else source.parent / f".{source.stem}-frames"
        decoder.run(source, mode.interval_s, outdir)
        candidates = enumerate_candidates(outdir, mode.interval_s, naming="ordinal")
    else:
        raise DecodeError(f"source not found: {source}")

    selected = select_samples(candidates, mode)
    if not selected:
        raise EmptySourceError(f"source {source} yielded no frames")
    return load_sequence(selected, mode, video_id=vid)
