"""Shared fixtures: pattern-built videos, the fake worker, the fake decoder.

Frame/video builders live in synthmedia.py; see its docstring for the
pattern-string language the fixtures accept.
"""

from __future__ import annotations

import json
import shlex
import sys
from pathlib import Path

import pytest

from synthmedia import FAKE_WORKER, ide_frame, make_video_dir, render_pattern, write_gray


@pytest.fixture()
def video_dir_factory(tmp_path):
    """Callable (name, pattern, interval_s=30) -> frame-directory path."""

    def factory(name: str, pattern: str, interval_s: float = 30.0) -> Path:
        return make_video_dir(tmp_path / name, pattern, interval_s=interval_s)

    return factory


@pytest.fixture()
def fake_worker_cmd():
    """Command-line builder for the scriptable fake worker."""

    def build(behavior: str = "ok", state: Path | None = None, log: Path | None = None) -> str:
        parts = [shlex.quote(sys.executable), shlex.quote(str(FAKE_WORKER)), "--behavior", behavior]
        if state is not None:
            parts += ["--state", shlex.quote(str(state))]
        if log is not None:
            parts += ["--log", shlex.quote(str(log))]
        return " ".join(parts)

    return build


@pytest.fixture()
def fake_decoder(tmp_path):
    """A stand-in decoder command plus a builder for 'video files' it can decode.

    A video file is a JSON pointer at a pre-rendered staging directory; the
    decoder copies the staged frames into {outdir} with ordinal names and
    appends one line to <video>.calls so tests can count real extractions.
    """
    script = tmp_path / "fake_decoder.py"
    script.write_text(
        """
import json, shutil, sys
from pathlib import Path

video, fps, outdir = Path(sys.argv[1]), sys.argv[2], Path(sys.argv[3])
meta = json.loads(video.read_text())
if meta.get("fail"):
    print("simulated decoder failure", file=sys.stderr)
    raise SystemExit(3)
outdir.mkdir(parents=True, exist_ok=True)
staged = sorted(Path(meta["frames_dir"]).glob("*.png"))
for i, src in enumerate(staged):
    shutil.copy2(src, outdir / f"frame_{i:06d}.png")
calls = video.with_suffix(".calls")
with open(calls, "a") as fh:
    fh.write(f"{fps}\\n")
""".lstrip(),
        encoding="utf-8",
    )
    command = f"{shlex.quote(sys.executable)} {shlex.quote(str(script))} {{input}} {{fps}} {{outdir}}"

    def make_video(name: str, pattern: str | None = None, fail: bool = False, count: int = 0) -> Path:
        staging = tmp_path / f"{name}-staged"
        staging.mkdir(parents=True, exist_ok=True)
        if pattern is not None:
            for i, arr in enumerate(render_pattern(pattern)):
                write_gray(staging / f"img_{i:06d}.png", arr)
        else:
            for i in range(count):
                write_gray(staging / f"img_{i:06d}.png", ide_frame(i))
        video = tmp_path / f"{name}.vid"
        video.write_text(json.dumps({"frames_dir": str(staging), "fail": fail}), encoding="utf-8")
        return video

    return {"command": command, "make_video": make_video}
