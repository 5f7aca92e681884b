"""Whole-sequence fitting with optional temporal smoothing."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import RankDeficient, TooFewLandmarks
from .fitting import FitConfig, FitResult, fit_frame
from .model import MorphableModel
from .sequences import LandmarkSequence
from .smoothing import SmootherState, push_and_smooth

__all__ = ["DroppedFrame", "SequenceFitResult", "fit_sequence"]


@dataclass(frozen=True)
class DroppedFrame:
    """A frame the fitter rejected, with the reason."""

    index: int
    timestamp_ms: float
    reason: str


@dataclass(frozen=True)
class SequenceFitResult:
    """Outcome of fitting a full sequence.

    ``results`` holds the emitted (smoothed when enabled) per-frame fits in
    order, ``raw_results`` the same fits before smoothing, ``dropped`` the
    rejected frames. Dropped frames appear in neither result list.
    """

    results: list[FitResult]
    raw_results: list[FitResult]
    dropped: list[DroppedFrame] = field(default_factory=list)
    smoothing_enabled: bool = True


def fit_sequence(
    model: MorphableModel,
    sequence: LandmarkSequence,
    config: FitConfig = FitConfig(),
    smoothing_enabled: bool = True,
    window_len: int = 3,
) -> SequenceFitResult:
    """Fit every frame in order, smoothing poses over a trailing window.

    Frames with too few valid landmarks (or degenerate geometry) are recorded
    as dropped and skipped; smoothing state carries across them.
    """
    smoother = SmootherState(window_len=window_len)
    results: list[FitResult] = []
    raw_results: list[FitResult] = []
    dropped: list[DroppedFrame] = []
    for index, frame in enumerate(sequence.frames):
        try:
            fit = fit_frame(frame, model, config)
        except (TooFewLandmarks, RankDeficient) as exc:
            dropped.append(DroppedFrame(index, frame.timestamp_ms, f"{type(exc).__name__}: {exc}"))
            continue
        raw_results.append(fit)
        results.append(push_and_smooth(smoother, fit) if smoothing_enabled else fit)
    return SequenceFitResult(
        results=results,
        raw_results=raw_results,
        dropped=dropped,
        smoothing_enabled=smoothing_enabled,
    )
