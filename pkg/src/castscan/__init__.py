"""Find live-coding screencasts in a set of videos.

Pipeline: sample frames from each video, mark near-duplicates by NRMSE,
classify the informative frames as IDE / non-IDE through a pluggable
classifier, then apply a two-stage video-level decision rule.
"""

from castscan.classifier import (
    IDE,
    NON_IDE,
    ClassifierSpec,
    FrameLabel,
    make_classifier,
    spawn_worker,
)
from castscan.decision import (
    DecisionParams,
    FrameAnnotation,
    VideoVerdict,
    decide,
    ide_ratio,
    longest_eligible_run,
)
from castscan.evaluation import (
    ConfusionCounts,
    EvalReport,
    all_positive_baseline,
    confusion,
    metrics,
    random_baseline,
)
from castscan.frames import (
    DecodeError,
    DecoderCommand,
    EmptySourceError,
    GrayFrame,
    SampledSequence,
    SamplingMode,
    acquire_frames,
    load_frame,
    sample_schedule,
)
from castscan.similarity import DuplicateMarking, mark_duplicates, nrmse

__version__ = "0.1.0"

__all__ = [
    "ClassifierSpec",
    "ConfusionCounts",
    "DecisionParams",
    "DecodeError",
    "DecoderCommand",
    "DuplicateMarking",
    "EmptySourceError",
    "EvalReport",
    "FrameAnnotation",
    "FrameLabel",
    "GrayFrame",
    "IDE",
    "NON_IDE",
    "SampledSequence",
    "SamplingMode",
    "VideoVerdict",
    "acquire_frames",
    "all_positive_baseline",
    "confusion",
    "decide",
    "ide_ratio",
    "load_frame",
    "longest_eligible_run",
    "make_classifier",
    "mark_duplicates",
    "metrics",
    "nrmse",
    "random_baseline",
    "sample_schedule",
    "spawn_worker",
]
