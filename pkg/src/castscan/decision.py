"""Two-stage video-level decision rule over per-frame annotations.

A video is a live-coding screencast iff
  (1) some window of consecutive sampled frames, every one non-duplicate and
      labeled IDE, is at least ``min_run`` long (a duplicate or a non-IDE
      frame breaks the window: a static screenshot must not count), and
  (2) the IDE share of non-duplicate frames is at least ``min_ratio``.

Both comparisons are inclusive. Runs are measured in sampled-frame
positions; at the default 30 s interval a run of 4 spans >= 90 s of video.
"""

from __future__ import annotations

from dataclasses import dataclass

from castscan.classifier import FrameLabel


@dataclass(slots=True)
class FrameAnnotation:
    """One sampled frame's dedup flag and (for non-duplicates) its label."""

    index: int
    duplicate: bool
    label: FrameLabel | None = None

    def validate(self) -> None:
        if self.duplicate != (self.label is None):
            raise ValueError(
                f"frame {self.index}: label must be absent exactly when duplicate"
            )


@dataclass(slots=True)
class DecisionParams:
    """Tunables of the pipeline; defaults follow the reference configuration."""

    min_run: int = 4
    min_ratio: float = 0.5
    dup_threshold: float = 0.05
    interval_s: float = 30.0

    def validate(self) -> None:
        if self.min_run < 1:
            raise ValueError("min_run must be >= 1")
        if not 0.0 <= self.min_ratio <= 1.0:
            raise ValueError("min_ratio must lie in [0, 1]")
        if not 0.0 <= self.dup_threshold <= 1.0:
            raise ValueError("dup_threshold must lie in [0, 1]")
        if self.interval_s <= 0:
            raise ValueError("interval_s must be positive")


@dataclass(slots=True)
class VideoVerdict:
    """Per-video decision plus the counts that produced it."""

    video_id: str
    is_screencast: bool
    n_ide: int
    n_info: int
    longest_run: int
    ratio: float
    sampled_count: int

    def to_record(self) -> dict:
        return {
            "video_id": self.video_id,
            "is_screencast": self.is_screencast,
            "n_ide": self.n_ide,
            "n_info": self.n_info,
            "longest_run": self.longest_run,
            "ratio": self.ratio,
            "sampled_count": self.sampled_count,
        }


def _eligible(ann: FrameAnnotation) -> bool:
    return not ann.duplicate and ann.label is not None and ann.label.is_ide


def longest_eligible_run(annotations: list[FrameAnnotation]) -> int:
    """Length of the longest window of consecutive non-duplicate IDE frames."""
    best = 0
    current = 0
    for ann in annotations:
        if _eligible(ann):
            current += 1
            if current > best:
                best = current
        else:
            current = 0
    return best


def ide_ratio(annotations: list[FrameAnnotation]) -> float:
    """IDE share among non-duplicate frames; 0 when everything is duplicate."""
    n_info = 0
    n_ide = 0
    for ann in annotations:
        if not ann.duplicate:
            n_info += 1
            if _eligible(ann):
                n_ide += 1
    return n_ide / n_info if n_info else 0.0


def decide(
    annotations: list[FrameAnnotation],
    params: DecisionParams | None = None,
    video_id: str = "",
) -> VideoVerdict:
    """Apply the two-stage rule and return the verdict with its diagnostics."""
    params = params if params is not None else DecisionParams()
    params.validate()

    n_info = sum(1 for a in annotations if not a.duplicate)
    n_ide = sum(1 for a in annotations if _eligible(a))
    run = longest_eligible_run(annotations)
    ratio = ide_ratio(annotations)
    return VideoVerdict(
        video_id=video_id,
        is_screencast=run >= params.min_run and ratio >= params.min_ratio,
        n_ide=n_ide,
        n_info=n_info,
        longest_run=run,
        ratio=ratio,
        sampled_count=len(annotations),
    )
