"""Protocol conformance suite for external classifier workers.

Drives a worker command through the wire protocol and checks the behaviors
every conforming worker must show: the hello handshake, correlation of
result ids to request ids, per-request error isolation (a bad frame path
must produce an error record without killing the process), and a clean exit
on shutdown. Labels are only checked for shape, not correctness, so the
suite works against any worker.
"""

from __future__ import annotations

import json
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from castscan.classifier import (
    IDE,
    NON_IDE,
    ClassifierSpec,
    WorkerSession,
    spawn_worker,
)


@dataclass(slots=True)
class ConformanceCheck:
    name: str
    passed: bool
    detail: str = ""


def _write_sample_frames(directory: Path) -> list[Path]:
    rng = np.random.default_rng(7)
    paths = []
    for i in range(3):
        arr = (rng.random((300, 300)) * 255).astype(np.uint8)
        if i == 0:
            arr[:16, :16] = 255  # bright corner block
        path = directory / f"sample_{i}.png"
        Image.fromarray(arr, mode="L").save(path)
        paths.append(path)
    return paths


def _check_results(session: WorkerSession, paths: list[Path]) -> str:
    """Send classifies with gaps in the id space; return '' or a failure detail."""
    labels = session.request(paths)
    if len(labels) != len(paths):
        return f"expected {len(paths)} results, got {len(labels)}"
    for label in labels:
        if label.label not in (IDE, NON_IDE):
            return f"label {label.label!r} is not ide/non_ide"
        if not 0.0 <= label.confidence <= 1.0:
            return f"confidence {label.confidence} outside [0, 1]"
    return ""


def run_conformance(command: str, timeout_s: float = 30.0) -> list[ConformanceCheck]:
    """Run all conformance checks against a worker command; never raises."""
    checks: list[ConformanceCheck] = []
    spec = ClassifierSpec(kind="worker", command=command, timeout_s=timeout_s)

    with tempfile.TemporaryDirectory(prefix="castscan-conformance-") as tmp:
        frames = _write_sample_frames(Path(tmp))

        session = None
        try:
            session = spawn_worker(spec)
            checks.append(ConformanceCheck("handshake-hello-v1", True))
        except Exception as err:
            checks.append(ConformanceCheck("handshake-hello-v1", False, str(err)))
            return checks

        try:
            detail = _check_results(session, frames)
            checks.append(ConformanceCheck("result-correlation", not detail, detail))
        except Exception as err:
            checks.append(ConformanceCheck("result-correlation", False, str(err)))

        # a missing path must yield an error record and leave the worker alive
        try:
            missing = Path(tmp) / "no-such-frame.png"
            session._send({"type": "classify", "id": 900001, "frame_path": str(missing)})
            msg = session._next_line(timeout_s, "the error record")
            ok = msg.get("type") == "error" and msg.get("id") == 900001
            detail = "" if ok else f"expected error record with id 900001, got {msg!r}"
            checks.append(ConformanceCheck("error-record-for-bad-path", ok, detail))
        except Exception as err:
            checks.append(ConformanceCheck("error-record-for-bad-path", False, str(err)))

        try:
            detail = _check_results(session, [frames[0]])
            alive = session.alive()
            passed = not detail and alive
            if not alive:
                detail = "worker exited after a per-request error"
            checks.append(ConformanceCheck("error-isolation", passed, detail))
        except Exception as err:
            checks.append(ConformanceCheck("error-isolation", False, str(err)))

        try:
            session._send({"type": "shutdown"})
            code = session._proc.wait(timeout=timeout_s)
            checks.append(
                ConformanceCheck(
                    "shutdown-clean-exit", code == 0, "" if code == 0 else f"exit status {code}"
                )
            )
        except Exception as err:
            checks.append(ConformanceCheck("shutdown-clean-exit", False, str(err)))
        finally:
            session.close()

    return checks


def format_checks(checks: list[ConformanceCheck]) -> str:
    lines = []
    for check in checks:
        status = "PASS" if check.passed else "FAIL"
        suffix = f"  ({check.detail})" if check.detail else ""
        lines.append(f"{status}  {check.name}{suffix}")
    return "\n".join(lines)


def checks_record(checks: list[ConformanceCheck]) -> dict:
    return {
        "passed": all(c.passed for c in checks),
        "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in checks],
    }


def _main(argv: list[str] | None = None) -> int:
    import argparse

    parser = argparse.ArgumentParser(description="Check a classifier worker's protocol conformance.")
    parser.add_argument("command", help="worker command line, quoted as one argument")
    parser.add_argument("--timeout", type=float, default=30.0)
    parser.add_argument("--out", type=Path, default=None, help="write a JSON record here")
    args = parser.parse_args(argv)

    checks = run_conformance(args.command, timeout_s=args.timeout)
    print(format_checks(checks))
    if args.out:
        args.out.write_text(json.dumps(checks_record(checks), indent=2) + "\n", encoding="utf-8")
    return 0 if all(c.passed for c in checks) else 1


if __name__ == "__main__":
    raise SystemExit(_main())
