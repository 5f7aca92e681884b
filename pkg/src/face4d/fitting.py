"""Per-frame pose and coefficient estimation from 2D landmarks.

The camera is scaled orthographic: a model-space vertex ``v`` maps to

    v_hat = rho * R[:2] @ v + t

with one scale factor ``rho`` (pixels per model unit) absorbing depth.
Fitting a frame alternates two linear solves:

* pose: a confidence-weighted least-squares fit of the 8 affine parameters
  (two scaled rotation rows and the 2D translation) against a fixed 3D
  landmark shape, followed by an SVD projection of the rotation rows back
  onto orthonormality;
* coefficients: a Tikhonov-regularized least-squares fit of the identity and
  expression weights, solved jointly in one stacked system.

Iteration 1 poses against the mean landmark shape, which is exactly the
single-pass procedure the engine mirrors; later iterations re-pose against
the currently reconstructed shape. All functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidConfig, RankDeficient, SingularSystem, TooFewLandmarks
from .model import Coefficients, MorphableModel

__all__ = [
    "Pose",
    "LandmarkFrame",
    "FitConfig",
    "FitResult",
    "project",
    "estimate_pose",
    "solve_coefficients",
    "fit_frame",
]

_ROTATION_TOL = 1e-8


@dataclass(frozen=True)
class Pose:
    """Scaled orthographic camera: scale rho, rotation R in SO(3), 2D translation."""

    scale: float
    rotation: np.ndarray      # (3, 3)
    translation: np.ndarray   # (2,)

    def __post_init__(self):
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64).reshape(3, 3))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=np.float64).reshape(2))

    def is_valid(self, tol: float = _ROTATION_TOL) -> bool:
        """True when R is orthonormal with det +1 and scale/translation are sane."""
        r = self.rotation
        return (
            self.scale > 0
            and np.isfinite(self.scale)
            and bool(np.all(np.isfinite(r)))
            and bool(np.all(np.isfinite(self.translation)))
            and float(np.abs(r.T @ r - np.eye(3)).max()) <= tol
            and abs(float(np.linalg.det(r)) - 1.0) <= tol
        )


@dataclass(frozen=True)
class LandmarkFrame:
    """One timestamped set of 2D landmarks with per-point confidences in [0, 1]."""

    timestamp_ms: float
    points: np.ndarray      # (L, 2) pixels
    confidence: np.ndarray  # (L,)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        conf = np.asarray(self.confidence, dtype=np.float64).reshape(-1)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] != conf.shape[0]:
            raise DimensionMismatch("points must be (L, 2) with matching confidence length")
        if not np.all(np.isfinite(pts)):
            raise InvalidConfig("landmark coordinates must be finite")
        if np.any(conf < 0) or np.any(conf > 1) or not np.all(np.isfinite(conf)):
            raise InvalidConfig("confidences must lie in [0, 1]")
        object.__setattr__(self, "timestamp_ms", float(self.timestamp_ms))
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "confidence", conf)

    @property
    def n_landmarks(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class FitConfig:
    """Solver knobs; defaults fit 68-landmark frames comfortably."""

    lambda_id: float = 0.05
    lambda_exp: float = 0.05
    n_alternations: int = 3
    min_valid_landmarks: int = 4
    confidence_floor: float = 0.1

    def __post_init__(self):
        if self.lambda_id < 0 or self.lambda_exp < 0:
            raise InvalidConfig("regularization weights must be >= 0")
        if self.n_alternations < 1:
            raise InvalidConfig("n_alternations must be >= 1")
        if not 0.0 <= self.confidence_floor <= 1.0:
            raise InvalidConfig("confidence_floor must lie in [0, 1]")


@dataclass(frozen=True)
class FitResult:
    """Fitted pose and coefficients for one frame plus residual diagnostics."""

    pose: Pose
    coeffs: Coefficients
    reprojection_rmse: float
    n_iterations: int
    valid_landmarks: int
    timestamp_ms: float = 0.0


def project(pose: Pose, vertices: np.ndarray) -> np.ndarray:
    """Project a (3, M) vertex matrix to (2, M) pixel coordinates."""
    v = np.asarray(vertices, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] != 3:
        raise DimensionMismatch("vertices must be a 3 x M matrix")
    return pose.scale * (pose.rotation[:2] @ v) + pose.translation[:, None]


def _weights(frame: LandmarkFrame, config: FitConfig) -> np.ndarray:
    """Confidence weights with everything below the floor dropped to zero."""
    w = frame.confidence.copy()
    w[w < config.confidence_floor] = 0.0
    return w


def estimate_pose(frame: LandmarkFrame, shape3d: np.ndarray, config: FitConfig = FitConfig()) -> Pose:
    """Estimate the scaled orthographic pose of a 3D landmark shape.

    Solves the confidence-weighted linear system over 8 unknowns (two scaled
    rotation rows a1, a2 and the translation), recovers
    ``rho = (|a1| + |a2|) / 2``, projects [a1/rho; a2/rho] to the nearest
    matrix with orthonormal rows via SVD, and completes the rotation with
    r3 = r1 x r2, which fixes det(R) = +1.

    Raises TooFewLandmarks when fewer than ``min_valid_landmarks`` points
    survive the confidence floor, RankDeficient for degenerate (e.g.
    collinear) landmark configurations.
    """
    shape3d = np.asarray(shape3d, dtype=np.float64)
    if shape3d.shape != (3, frame.n_landmarks):
        raise DimensionMismatch("shape3d must be 3 x L matching the frame")
    w = _weights(frame, config)
    n_valid = int(np.count_nonzero(w))
    if n_valid < config.min_valid_landmarks:
        raise TooFewLandmarks(f"{n_valid} valid landmarks, need {config.min_valid_landmarks}")

    # Shared L x 4 design [x y z 1]; the u and v rows decouple into two
    # weighted solves against the same normal matrix.
    design = np.hstack([shape3d.T, np.ones((frame.n_landmarks, 1))])
    weighted = design * np.sqrt(w)[:, None]
    if np.linalg.matrix_rank(weighted) < 4:
        raise RankDeficient("landmark configuration is degenerate (rank < 4)")
    ata = design.T @ (design * w[:, None])
    atb = design.T @ (frame.points * w[:, None])
    try:
        theta = np.linalg.solve(ata, atb)   # (4, 2)
    except np.linalg.LinAlgError as exc:
        raise RankDeficient(str(exc)) from None

    a1, a2 = theta[:3, 0], theta[:3, 1]
    translation = theta[3]
    rho = 0.5 * (np.linalg.norm(a1) + np.linalg.norm(a2))
    if not np.isfinite(rho) or rho <= 0:
        raise RankDeficient("recovered scale is not positive")
    u, _, vt = np.linalg.svd(np.vstack([a1, a2]) / rho, full_matrices=False)
    top = u @ vt
    rotation = np.vstack([top, np.cross(top[0], top[1])])
    return Pose(scale=rho, rotation=rotation, translation=translation)


def solve_coefficients(
    frame: LandmarkFrame,
    pose: Pose,
    model: MorphableModel,
    config: FitConfig = FitConfig(),
) -> Coefficients:
    """Solve the joint identity+expression least-squares problem for a fixed pose.

    Minimizes ``sum_i w_i |rho * P @ (mean_i + U_i c) + t - l_i|^2`` plus the
    Tikhonov penalty ``lambda_id * sum (p_k / sigma_id_k)^2`` (likewise for q),
    where U stacks the identity and expression bases restricted to the
    landmark vertices. Solved through the regularized normal equations.
    """
    if frame.n_landmarks != model.n_landmarks:
        raise DimensionMismatch(
            f"frame has {frame.n_landmarks} landmarks, model expects {model.n_landmarks}")
    w = _weights(frame, config)
    L = frame.n_landmarks
    P = pose.scale * pose.rotation[:2]                       # (2, 3)

    basis = model.landmark_basis()                           # (3L, K)
    K = basis.shape[1]
    jac = (P @ basis.reshape(L, 3, K)).reshape(2 * L, K)     # per-landmark 2x3 @ 3xK blocks
    residual = (frame.points - (P @ model.landmark_mean()).T - pose.translation).reshape(-1)
    w2 = np.repeat(w, 2)

    reg = np.concatenate([
        config.lambda_id / model.id_stddev ** 2,
        config.lambda_exp / model.exp_stddev ** 2,
    ])
    if config.lambda_id == 0 and config.lambda_exp == 0 \
            and np.linalg.matrix_rank(jac * np.sqrt(w2)[:, None]) < K:
        raise SingularSystem("unregularized design matrix is rank-deficient; "
                             "supply a nonzero lambda")
    ata = jac.T @ (jac * w2[:, None]) + np.diag(reg)
    atb = jac.T @ (w2 * residual)
    try:
        c = np.linalg.solve(ata, atb)
    except np.linalg.LinAlgError:
        raise SingularSystem("coefficient system is singular; supply a nonzero lambda") from None
    return Coefficients(c[:model.k_id], c[model.k_id:])


def _weighted_rmse(frame: LandmarkFrame, pose: Pose, shape3d: np.ndarray, w: np.ndarray) -> float:
    errors = project(pose, shape3d).T - frame.points
    return float(np.sqrt((w @ np.sum(errors ** 2, axis=1)) / w.sum()))


def fit_frame(frame: LandmarkFrame, model: MorphableModel, config: FitConfig = FitConfig()) -> FitResult:
    """Fit pose and coefficients to one frame by pose/shape alternation.

    Iteration 1 estimates the pose against the mean landmark shape and solves
    the coefficients; each further iteration re-estimates the pose against the
    reconstructed landmark shape and re-solves. Returns the final state with
    the confidence-weighted reprojection RMSE in pixels.
    """
    if frame.n_landmarks != model.n_landmarks:
        raise DimensionMismatch(
            f"frame has {frame.n_landmarks} landmarks, model expects {model.n_landmarks}")
    w = _weights(frame, config)
    mean_lm = model.landmark_mean()                          # (3, L)
    basis = model.landmark_basis()

    shape3d = mean_lm
    pose = None
    coeffs = None
    for _ in range(config.n_alternations):
        pose = estimate_pose(frame, shape3d, config)
        coeffs = solve_coefficients(frame, pose, model, config)
        shape3d = mean_lm + (basis @ coeffs.stacked()).reshape(-1, 3).T

    return FitResult(
        pose=pose,
        coeffs=coeffs,
        reprojection_rmse=_weighted_rmse(frame, pose, shape3d, w),
        n_iterations=config.n_alternations,
        valid_landmarks=int(np.count_nonzero(w)),
        timestamp_ms=frame.timestamp_ms,
    )
