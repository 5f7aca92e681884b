"""Temporal pose smoothing over a short trailing window, plus jitter metrics.

The smoother averages the pose of the last three frames before display:
scale and translation by arithmetic mean, rotation by the chordal L2 mean
(entrywise average projected back onto SO(3)). Warm-up frames average over
however many poses are available so display never stalls. Coefficients pass
through unsmoothed by default; an optional exponential moving average is
available behind a flag.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Deque, Iterable, Sequence

import numpy as np

from .errors import EmptyInput, InvalidConfig, TooShort
from .fitting import FitResult, Pose
from .model import Coefficients

__all__ = [
    "rotation_geodesic",
    "average_rotations",
    "SmootherState",
    "push_and_smooth",
    "jitter_metric",
]


def rotation_geodesic(r_a: np.ndarray, r_b: np.ndarray) -> float:
    """Geodesic distance between two rotations, in radians."""
    cos_angle = (np.trace(r_a.T @ r_b) - 1.0) / 2.0
    return float(np.arccos(np.clip(cos_angle, -1.0, 1.0)))


def average_rotations(rotations: Iterable[np.ndarray]) -> np.ndarray:
    """Chordal L2 mean: entrywise average projected onto SO(3) via SVD.

    The projection replaces the singular values by one and flips the sign of
    the last singular vector if needed so det(R) = +1.
    """
    mats = [np.asarray(r, dtype=np.float64) for r in rotations]
    if not mats:
        raise EmptyInput("cannot average zero rotations")
    u, _, vt = np.linalg.svd(np.mean(mats, axis=0))
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


@dataclass
class SmootherState:
    """Per-session trailing window of recent fits. Single writer per session."""

    window_len: int = 3
    smooth_coefficients: bool = False
    ema_alpha: float = 0.5
    _poses: Deque[Pose] = field(default_factory=deque, repr=False)
    _coeff_ema: Coefficients | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.window_len < 1:
            raise InvalidConfig("window_len must be >= 1")
        if not 0.0 < self.ema_alpha <= 1.0:
            raise InvalidConfig("ema_alpha must lie in (0, 1]")

    def reset(self) -> None:
        self._poses.clear()
        self._coeff_ema = None

    def __len__(self) -> int:
        return len(self._poses)


def push_and_smooth(state: SmootherState, fit: FitResult) -> FitResult:
    """Append a fit to the window and return it with the window-averaged pose.

    Scale and translation are arithmetic means, rotation is the chordal mean.
    Coefficients pass through unchanged unless ``state.smooth_coefficients``
    enables the exponential moving average.
    """
    state._poses.append(fit.pose)
    while len(state._poses) > state.window_len:
        state._poses.popleft()

    poses = list(state._poses)
    smoothed_pose = Pose(
        scale=float(np.mean([p.scale for p in poses])),
        rotation=average_rotations(p.rotation for p in poses),
        translation=np.mean([p.translation for p in poses], axis=0),
    )

    coeffs = fit.coeffs
    if state.smooth_coefficients:
        if state._coeff_ema is None:
            state._coeff_ema = coeffs
        else:
            a = state.ema_alpha
            prev = state._coeff_ema
            state._coeff_ema = Coefficients(
                a * coeffs.identity + (1 - a) * prev.identity,
                a * coeffs.expression + (1 - a) * prev.expression,
            )
        coeffs = state._coeff_ema

    return replace(fit, pose=smoothed_pose, coeffs=coeffs)


def jitter_metric(poses: Sequence[Pose]) -> float:
    """Mean frame-to-frame pose delta over a sequence.

    Each consecutive pair contributes the geodesic rotation distance in
    radians, the translation delta scaled by 1/100 px, and the relative scale
    delta |drho| / mean(rho). Zero for a constant sequence.
    """
    if len(poses) < 2:
        raise TooShort("jitter needs at least two poses")
    total = 0.0
    for a, b in zip(poses, poses[1:]):
        total += rotation_geodesic(a.rotation, b.rotation)
        total += float(np.linalg.norm(b.translation - a.translation)) / 100.0
        total += abs(b.scale - a.scale) / ((a.scale + b.scale) / 2.0)
    return total / (len(poses) - 1)
