"""Landmark sequences: synthetic generation and .lmk.jsonl file round trips.

The generator inverts the fitting pipeline to produce verification data: it
draws one identity, animates expression sinusoidally, sweeps the pose along
smooth trajectories, projects the landmark vertices through the scaled
orthographic camera, and optionally adds pixel noise and occlusions. The
ground truth it used is returned alongside so round-trip tests can compare.

File format (".lmk.jsonl"), one JSON object per line:

    {"version": 1, "n_landmarks": L, "image_size": [w, h]}     header
    {"t": ms, "pts": [[x, y], ...], "conf": [c, ...]}          one per frame
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import BinaryIO

import numpy as np

from .errors import InvalidConfig, ParseError, SchemaError
from .fitting import LandmarkFrame, Pose, project
from .model import Coefficients, MorphableModel

__all__ = [
    "LandmarkSequence",
    "GroundTruth",
    "SequenceGenConfig",
    "generate_sequence",
    "write_sequence",
    "read_sequence",
    "write_ground_truth",
    "read_ground_truth",
]


@dataclass(frozen=True)
class LandmarkSequence:
    """Ordered landmark frames with uniform landmark count."""

    frames: list[LandmarkFrame]
    source: str = "file"                       # "file" | "synthetic"
    image_size: tuple[int, int] = (640, 480)   # (width, height), overlay scaling

    def __post_init__(self):
        if self.frames:
            counts = {f.n_landmarks for f in self.frames}
            if len(counts) != 1:
                raise SchemaError(f"inconsistent landmark counts: {sorted(counts)}")
            times = [f.timestamp_ms for f in self.frames]
            if any(b <= a for a, b in zip(times, times[1:])):
                raise SchemaError("timestamps must be strictly increasing")

    @property
    def n_landmarks(self) -> int:
        return self.frames[0].n_landmarks if self.frames else 0

    def __len__(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class GroundTruth:
    """Per-frame pose and coefficients the generator used."""

    poses: list[Pose]
    coefficients: list[Coefficients]

    def __len__(self) -> int:
        return len(self.poses)


@dataclass(frozen=True)
class SequenceGenConfig:
    """Trajectory and noise settings for the synthetic generator.

    Angles sweep smoothly from -amplitude to +amplitude over the sequence
    (yaw as a half-cosine, pitch/roll as one full sine cycle); translation
    orbits the image center; scale oscillates across ``scale_range``;
    expression components run ``expression_cycles`` sinusoidal cycles with
    seeded amplitudes within +/- 2 sigma. Identity is drawn once per sequence
    within +/- 2 sigma.
    """

    seed: int = 0
    n_frames: int = 300
    yaw_deg: float = 30.0
    pitch_deg: float = 0.0
    roll_deg: float = 0.0
    translation_px: float = 0.0
    scale_range: tuple[float, float] = (1.5, 1.5)
    noise_sigma_px: float = 0.0
    occlusion_rate: float = 0.0
    fps: float = 30.0
    image_size: tuple[int, int] = (640, 480)
    expression_cycles: float = 2.0

    def __post_init__(self):
        if self.n_frames < 1:
            raise InvalidConfig("n_frames must be >= 1")
        if self.noise_sigma_px < 0:
            raise InvalidConfig("noise_sigma_px must be >= 0")
        if not 0.0 <= self.occlusion_rate < 1.0:
            raise InvalidConfig("occlusion_rate must lie in [0, 1)")
        if self.fps <= 0:
            raise InvalidConfig("fps must be positive")
        lo, hi = self.scale_range
        if lo <= 0 or hi < lo:
            raise InvalidConfig("scale_range must be positive with min <= max")


def _rotation(yaw: float, pitch: float, roll: float) -> np.ndarray:
    """R = Rz(roll) @ Ry(yaw) @ Rx(pitch), angles in radians."""
    cy, sy = math.cos(yaw), math.sin(yaw)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cr, sr = math.cos(roll), math.sin(roll)
    ry = np.array([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]])
    rz = np.array([[cr, -sr, 0.0], [sr, cr, 0.0], [0.0, 0.0, 1.0]])
    return rz @ ry @ rx


def generate_sequence(
    model: MorphableModel,
    config: SequenceGenConfig,
) -> tuple[LandmarkSequence, GroundTruth]:
    """Generate a deterministic synthetic sequence plus its ground truth.

    Occluded landmarks get confidence 0 and coordinates (0, 0); the fitter,
    not the generator, decides whether a frame still has enough points.
    """
    rng = np.random.default_rng(config.seed)
    n = config.n_frames
    k_id, k_exp = model.k_id, model.k_exp

    identity = rng.uniform(-2.0, 2.0, k_id) * model.id_stddev
    exp_amp = rng.uniform(0.0, 2.0, k_exp) * model.exp_stddev
    exp_phase = rng.uniform(0.0, 2.0 * math.pi, k_exp)

    mean_lm = model.landmark_mean()          # (3, L)
    basis_lm = model.landmark_basis()        # (3L, K)
    L = model.n_landmarks
    cx, cy = config.image_size[0] / 2.0, config.image_size[1] / 2.0
    lo, hi = config.scale_range

    frames: list[LandmarkFrame] = []
    poses: list[Pose] = []
    coeffs_list: list[Coefficients] = []
    for f in range(n):
        u = f / (n - 1) if n > 1 else 0.0
        yaw = math.radians(config.yaw_deg) * -math.cos(math.pi * u)
        pitch = math.radians(config.pitch_deg) * math.sin(2.0 * math.pi * u)
        roll = math.radians(config.roll_deg) * math.sin(2.0 * math.pi * u + math.pi / 3.0)
        pose = Pose(
            scale=lo + (hi - lo) * (1.0 - math.cos(2.0 * math.pi * u)) / 2.0,
            rotation=_rotation(yaw, pitch, roll),
            translation=np.array([
                cx + config.translation_px * math.sin(2.0 * math.pi * u),
                cy + config.translation_px * math.sin(4.0 * math.pi * u) / 2.0,
            ]),
        )
        q = exp_amp * np.sin(2.0 * math.pi * config.expression_cycles * u + exp_phase)
        coeffs = Coefficients(identity, q)

        shape3d = mean_lm + (basis_lm @ coeffs.stacked()).reshape(-1, 3).T
        # Noise is drawn even at sigma 0 so the stream stays aligned across
        # noise levels of the same seed (x + 0.0 * z == x exactly).
        pts = project(pose, shape3d).T + rng.normal(scale=config.noise_sigma_px, size=(L, 2))
        conf = np.ones(L)
        occluded = rng.random(L) < config.occlusion_rate
        pts[occluded] = 0.0
        conf[occluded] = 0.0

        frames.append(LandmarkFrame(timestamp_ms=1000.0 * f / config.fps, points=pts, confidence=conf))
        poses.append(pose)
        coeffs_list.append(coeffs)

    sequence = LandmarkSequence(frames=frames, source="synthetic", image_size=config.image_size)
    return sequence, GroundTruth(poses=poses, coefficients=coeffs_list)


# --- .lmk.jsonl round trip ----------------------------------------------------

def write_sequence(sequence: LandmarkSequence, sink: BinaryIO) -> None:
    """Write a sequence as newline-delimited JSON; floats keep full precision."""
    header = {
        "version": 1,
        "n_landmarks": sequence.n_landmarks,
        "image_size": list(sequence.image_size),
    }
    sink.write((json.dumps(header) + "\n").encode("utf-8"))
    for frame in sequence.frames:
        line = {
            "t": frame.timestamp_ms,
            "pts": frame.points.tolist(),
            "conf": frame.confidence.tolist(),
        }
        sink.write((json.dumps(line) + "\n").encode("utf-8"))


def _parse_line(text: str, line_no: int) -> dict:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line_no) from None
    if not isinstance(obj, dict):
        raise ParseError("expected a JSON object", line_no)
    return obj


def read_sequence(source: BinaryIO) -> LandmarkSequence:
    """Read a .lmk.jsonl stream; raises ParseError / SchemaError with line numbers."""
    try:
        lines = source.read().decode("utf-8").splitlines()
    except UnicodeDecodeError as exc:
        raise ParseError(f"stream is not UTF-8: {exc}") from None
    if not lines or not lines[0].strip():
        raise ParseError("no header", 1)
    header = _parse_line(lines[0], 1)
    if header.get("version") != 1:
        raise ParseError(f"unsupported version {header.get('version')!r}", 1)
    try:
        n_landmarks = int(header["n_landmarks"])
        width, height = (int(v) for v in header["image_size"])
    except (KeyError, TypeError, ValueError):
        raise ParseError("header needs integer n_landmarks and image_size [w, h]", 1) from None

    frames: list[LandmarkFrame] = []
    last_t = -math.inf
    for line_no, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        obj = _parse_line(raw, line_no)
        try:
            t = float(obj["t"])
            pts = np.asarray(obj["pts"], dtype=np.float64)
            conf = np.asarray(obj["conf"], dtype=np.float64)
        except (KeyError, TypeError, ValueError):
            raise ParseError("frame needs t, pts, conf", line_no) from None
        if pts.ndim != 2 or pts.shape != (n_landmarks, 2):
            raise SchemaError(
                f"expected {n_landmarks} landmark points, got {pts.shape[0] if pts.ndim else 0}",
                line_no)
        if conf.shape != (n_landmarks,):
            raise SchemaError(f"expected {n_landmarks} confidences", line_no)
        if np.any(conf < 0) or np.any(conf > 1) or not np.all(np.isfinite(conf)):
            raise SchemaError("confidences must lie in [0, 1]", line_no)
        if t <= last_t:
            raise SchemaError(f"timestamp {t} not increasing", line_no)
        last_t = t
        frames.append(LandmarkFrame(timestamp_ms=t, points=pts, confidence=conf))

    return LandmarkSequence(frames=frames, source="file", image_size=(width, height))


# --- ground-truth JSON --------------------------------------------------------

def write_ground_truth(truth: GroundTruth, sink: BinaryIO) -> None:
    doc = {
        "version": 1,
        "frames": [
            {
                "rho": pose.scale,
                "R": pose.rotation.reshape(-1).tolist(),
                "t2": pose.translation.tolist(),
                "p": coeffs.identity.tolist(),
                "q": coeffs.expression.tolist(),
            }
            for pose, coeffs in zip(truth.poses, truth.coefficients)
        ],
    }
    sink.write(json.dumps(doc).encode("utf-8"))


def read_ground_truth(source: BinaryIO) -> GroundTruth:
    try:
        doc = json.loads(source.read().decode("utf-8"))
        poses = [
            Pose(scale=fr["rho"], rotation=np.asarray(fr["R"]).reshape(3, 3),
                 translation=np.asarray(fr["t2"]))
            for fr in doc["frames"]
        ]
        coeffs = [Coefficients(fr["p"], fr["q"]) for fr in doc["frames"]]
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise ParseError(f"invalid ground-truth file: {exc}") from None
    return GroundTruth(poses=poses, coefficients=coeffs)
