"""Landmark-driven 4D face reconstruction.

Fits a linear morphable model (identity + expression) to 2D landmark
sequences under a scaled orthographic camera, smooths poses over time, and
streams the results to interactive viewers.
"""

from . import errors
from .fitting import (
    FitConfig,
    FitResult,
    LandmarkFrame,
    Pose,
    estimate_pose,
    fit_frame,
    project,
    solve_coefficients,
)
from .model import (
    Coefficients,
    MorphableModel,
    exaggerate,
    reconstruct_mesh,
    synthesize_model,
    validate_model,
)
from .modelio import load_model, save_model
from .pipeline import DroppedFrame, SequenceFitResult, fit_sequence
from .registry import RECOGNIZED_MODEL_IDS, ModelRegistry, load_registry, synthesize_registry
from .reports import read_report, write_report
from .sequences import (
    GroundTruth,
    LandmarkSequence,
    SequenceGenConfig,
    generate_sequence,
    read_ground_truth,
    read_sequence,
    write_ground_truth,
    write_sequence,
)
from .smoothing import (
    SmootherState,
    average_rotations,
    jitter_metric,
    push_and_smooth,
    rotation_geodesic,
)

__version__ = "0.1.0"

__all__ = [
    "errors",
    "Coefficients",
    "MorphableModel",
    "exaggerate",
    "reconstruct_mesh",
    "synthesize_model",
    "validate_model",
    "load_model",
    "save_model",
    "RECOGNIZED_MODEL_IDS",
    "ModelRegistry",
    "load_registry",
    "synthesize_registry",
    "Pose",
    "LandmarkFrame",
    "FitConfig",
    "FitResult",
    "project",
    "estimate_pose",
    "solve_coefficients",
    "fit_frame",
    "SmootherState",
    "average_rotations",
    "jitter_metric",
    "push_and_smooth",
    "rotation_geodesic",
    "GroundTruth",
    "LandmarkSequence",
    "SequenceGenConfig",
    "generate_sequence",
    "read_sequence",
    "write_sequence",
    "read_ground_truth",
    "write_ground_truth",
    "DroppedFrame",
    "SequenceFitResult",
    "fit_sequence",
    "read_report",
    "write_report",
    "__version__",
]
