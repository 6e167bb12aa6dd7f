"""NRMSE dissimilarity between frames and duplicate marking.

The dissimilarity of frames a (reference) and b is

    sqrt( sum((a - b)^2) / sum(a^2) )

clamped to [0, 1]. A zero-energy (all-black) reference scores 0 against
another all-black frame and 1 against anything else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from castscan.frames import GrayFrame, SampledSequence

DEFAULT_DUP_THRESHOLD = 0.05


def _pixels(frame: GrayFrame | np.ndarray) -> np.ndarray:
    if isinstance(frame, GrayFrame):
        return frame.pixels
    return np.asarray(frame, dtype=np.float64)


def nrmse(reference: GrayFrame | np.ndarray, other: GrayFrame | np.ndarray) -> float:
    """Normalized root-mean-square dissimilarity in [0, 1]; 0 means identical."""
    a = _pixels(reference)
    b = _pixels(other)
    if a.shape != b.shape:
        raise ValueError(f"frame dimensions differ: {a.shape} vs {b.shape}")
    diff = a - b
    num = float(np.dot(diff.ravel(), diff.ravel()))
    den = float(np.dot(a.ravel(), a.ravel()))
    if den == 0.0:
        return 0.0 if num == 0.0 else 1.0
    return min(1.0, math.sqrt(num / den))


@dataclass(slots=True)
class DuplicateMarking:
    """Per-frame duplicate flags plus, for each duplicate, its reference index."""

    duplicate_flags: list[bool]
    reference_indices: dict[int, int] = field(default_factory=dict)


def mark_duplicates(
    seq: SampledSequence | list[GrayFrame],
    threshold: float = DEFAULT_DUP_THRESHOLD,
) -> DuplicateMarking:
    """Mark frames that barely differ from the current reference frame.

    Frame 0 is the first reference. Each later frame whose dissimilarity to
    the reference is <= threshold is a duplicate of it; the first frame above
    the threshold becomes the new reference, and the scan repeats to the end.
    """
    frames = seq.frames if isinstance(seq, SampledSequence) else seq
    if not frames:
        raise ValueError("cannot mark duplicates in an empty sequence")
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {threshold}")

    flags = [False] * len(frames)
    refs: dict[int, int] = {}
    ref = 0
    for i in range(1, len(frames)):
        if nrmse(frames[ref], frames[i]) <= threshold:
            flags[i] = True
            refs[i] = ref
        else:
            ref = i
    return DuplicateMarking(duplicate_flags=flags, reference_indices=refs)
