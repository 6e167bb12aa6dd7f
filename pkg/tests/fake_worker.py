"""Scriptable classifier worker used to exercise the gateway's wire handling.

Default behavior is a well-behaved worker: hello handshake, one result per
classify record (label from the frame's top-left pixel), error records for
unreadable frames, clean exit on shutdown. Other behaviors inject specific
protocol violations; each is exactly one failure mode so tests stay sharp.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path


def emit(record: dict) -> None:
    sys.stdout.write(json.dumps(record) + "\n")
    sys.stdout.flush()


def label_for(path: str) -> tuple[str, float]:
    from PIL import Image

    with Image.open(path) as img:
        value = img.convert("L").getpixel((0, 0))
    return ("ide", 0.95) if value > 200 else ("non_ide", 0.9)


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--behavior", default="ok")
    parser.add_argument("--state", default=None, help="flag file used by crash_once")
    parser.add_argument("--log", default=None, help="append every raw request line here")
    args = parser.parse_args()
    behavior = args.behavior

    if behavior == "exit_before_hello":
        return 0
    if behavior == "mute":
        time.sleep(600)
        return 0
    if behavior == "bad_version":
        emit({"type": "hello", "protocol_version": 2})
    elif behavior == "garbage_hello":
        sys.stdout.write("hi, ready to classify\n")
        sys.stdout.flush()
    else:
        emit({"type": "hello", "protocol_version": 1})

    reverse_buffer: list[dict] = []

    def answer(req: dict) -> None:
        rid, path = req["id"], req["frame_path"]
        try:
            label, confidence = label_for(path)
        except Exception as err:
            emit({"type": "error", "id": rid, "message": f"cannot read frame {path}: {err}"})
            return
        if behavior == "error_on_poison" and "poison" in Path(path).name:
            emit({"type": "error", "id": rid, "message": "poisoned frame"})
            return
        emit({"type": "result", "id": rid, "label": label, "confidence": confidence})

    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        if args.log:
            with open(args.log, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
        req = json.loads(line)
        kind = req.get("type")
        if kind == "shutdown":
            for buffered in reversed(reverse_buffer):
                answer(buffered)
            if behavior == "slow_shutdown":
                time.sleep(600)
            return 0
        if kind != "classify":
            continue

        if behavior == "crash_on_classify":
            return 17
        if behavior == "crash_once":
            flag = Path(args.state)
            if not flag.exists():
                flag.write_text("crashed once", encoding="utf-8")
                return 17
            # flag already set: restarted life answers normally
        if behavior == "slow":
            time.sleep(3)
        if behavior == "non_json":
            sys.stdout.write("certainly! here is the classification you asked for\n")
            sys.stdout.flush()
            continue
        if behavior == "wrong_type":
            emit({"type": "banana", "id": req["id"]})
            continue
        if behavior == "bad_label":
            emit({"type": "result", "id": req["id"], "label": "maybe", "confidence": 0.5})
            continue
        if behavior == "unknown_id":
            emit({"type": "result", "id": req["id"] + 1000, "label": "ide", "confidence": 0.5})
            continue
        if behavior == "duplicate_id":
            answer(req)
            answer(req)
            continue
        if behavior == "reverse_pairs":
            reverse_buffer.append(req)
            if len(reverse_buffer) == 2:
                for buffered in reversed(reverse_buffer):
                    answer(buffered)
                reverse_buffer.clear()
            continue
        answer(req)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
