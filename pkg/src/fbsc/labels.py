"""Frame-label algebra for anticipation and score/label alignment."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass(frozen=True)
class LabelSeries:
    """Binary per-frame labels of one video.

    ``alpha`` is the anticipation window in frames; ``alpha == 0`` holds the
    plain detection labels, and in general ``len(values) == T - alpha``.
    """

    video_id: str
    alpha: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 1:
            raise ValueError("label values must be 1-D")
        if values.size and not np.isin(values, (0, 1)).all():
            raise ValueError(f"labels of {self.video_id} must be 0/1")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        object.__setattr__(self, "values", values.astype(np.uint8))

    @property
    def frame_count(self) -> int:
        """Length ``T`` of the underlying video."""
        return len(self.values) + self.alpha


@dataclass(frozen=True)
class ScoreSeries:
    """Per-frame anomaly scores of one video.

    ``values[k]`` scores frame ``start_offset + k``. ``alpha`` is the
    anticipation window in frames (0 for detection) and ``stride`` the frame
    stride the model ran at, so ``alpha // stride`` predicted steps were used.
    """

    video_id: str
    alpha: int
    start_offset: int
    values: np.ndarray
    stride: int = 1

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValueError("score values must be 1-D")
        if not np.isfinite(values).all():
            raise ValueError(f"non-finite scores for {self.video_id}")
        object.__setattr__(self, "values", values)

    @property
    def end(self) -> int:
        return self.start_offset + len(self.values)


@dataclass(frozen=True)
class AlignedPair:
    video_id: str
    alpha: int
    offset: int
    dropped: int
    scores: np.ndarray
    labels: np.ndarray


def anticipation_labels(g0: LabelSeries, alpha: int) -> LabelSeries:
    """Labels for "an anomaly occurs within the next ``alpha`` frames".

    ``out[t] = max(g[t+1], ..., g[t+alpha])`` for ``t < T - alpha``.
    """
    if g0.alpha != 0:
        raise ValueError("anticipation labels are derived from detection labels (alpha=0)")
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    T = len(g0.values)
    if alpha >= T:
        raise ValueError(f"horizon exceeds video length (alpha={alpha}, T={T})")
    return LabelSeries(g0.video_id, alpha, kernels.future_window_max(g0.values, alpha))


def labels_for(g0: LabelSeries, alpha: int) -> LabelSeries:
    """``g0`` itself for ``alpha == 0``, else the anticipation labels."""
    return g0 if alpha == 0 else anticipation_labels(g0, alpha)


def align_series(scores: ScoreSeries, labels: LabelSeries) -> AlignedPair:
    """Cut a score series and a label series down to their common frames.

    Frames before ``scores.start_offset`` (warm-up) are dropped from both
    sides; ``dropped`` counts every label frame that did not survive.
    """
    if scores.video_id != labels.video_id:
        raise ValueError(f"video mismatch: {scores.video_id!r} vs {labels.video_id!r}")
    if scores.alpha != labels.alpha:
        raise ValueError(f"alpha mismatch: scores {scores.alpha} vs labels {labels.alpha}")
    start = scores.start_offset
    stop = min(scores.end, len(labels.values))
    if stop < start:
        stop = start
    s = scores.values[: stop - start]
    y = labels.values[start:stop]
    return AlignedPair(
        video_id=scores.video_id,
        alpha=scores.alpha,
        offset=start,
        dropped=len(labels.values) - len(y),
        scores=s,
        labels=y,
    )
