"""Per-pixel temporal collapse of an aligned sequence.

The mean is the naive multi-frame baseline; the median is the robust
collapse used when aggregating decomposed background frames.
"""

from __future__ import annotations

import numpy as np

from rainkit.sequence_io import FrameSequence


def _stack(seq) -> np.ndarray:
    frames = seq.frames if isinstance(seq, FrameSequence) else list(seq)
    return np.stack([np.asarray(f, dtype=float) for f in frames])


def temporal_mean(seq) -> np.ndarray:
    """Arithmetic mean over frames, per pixel and channel.

    Values are sorted per pixel before summing so the result is bitwise
    independent of frame order.
    """
    stack = np.sort(_stack(seq), axis=0)
    return stack.sum(axis=0) / stack.shape[0]


def temporal_median(seq) -> np.ndarray:
    """Per-pixel median over frames; even counts average the two central values."""
    return np.median(_stack(seq), axis=0)
