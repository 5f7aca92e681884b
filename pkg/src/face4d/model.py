"""Linear morphable face model: mean shape plus identity and expression subspaces.

A model instance is a mean shape vector (interleaved xyz per vertex) together
with two orthonormal linear bases. A face is reconstructed as

    vertices = mean + id_basis @ p + exp_basis @ q

where ``p`` and ``q`` are raw coefficient weights. Per-component standard
deviations (``id_stddev`` / ``exp_stddev``) describe plausible coefficient
magnitudes and feed the fitting regularizer; the bases themselves stay
unit-norm. Models are immutable after construction and safe to share across
threads; every operation here is a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidConfig, InvariantViolation

__all__ = [
    "MorphableModel",
    "Coefficients",
    "validate_model",
    "reconstruct_mesh",
    "exaggerate",
    "synthesize_model",
]

# Tolerances for the structural invariants.
_UNIT_NORM_TOL = 1e-9
_ORTHO_TOL = 1e-8


@dataclass(frozen=True)
class Coefficients:
    """Identity (p) and expression (q) coefficient vectors for one face."""

    identity: np.ndarray
    expression: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "identity", np.asarray(self.identity, dtype=np.float64).reshape(-1))
        object.__setattr__(self, "expression", np.asarray(self.expression, dtype=np.float64).reshape(-1))

    @staticmethod
    def zeros(k_id: int, k_exp: int) -> "Coefficients":
        return Coefficients(np.zeros(k_id), np.zeros(k_exp))

    def stacked(self) -> np.ndarray:
        """Concatenated (identity, expression) vector."""
        return np.concatenate([self.identity, self.expression])


@dataclass(frozen=True)
class MorphableModel:
    """A combined identity + expression linear shape model.

    Attributes
    ----------
    model_id : str
        Registry key ("global" or a bespoke demographic id).
    mean_shape : (3N,) float64
        Mean face, interleaved xyz per vertex, in model units.
    id_basis : (3N, K_id) float64
        Orthonormal identity basis (unit-norm, mutually orthogonal columns).
    id_stddev : (K_id,) float64
        Positive per-component standard deviations, model units per unit weight.
    exp_basis : (3N, K_exp) float64
        Orthonormal expression basis (delta blendshapes around the mean).
    exp_stddev : (K_exp,) float64
        Positive per-component standard deviations.
    landmark_indices : (L,) uint32
        Distinct vertex indices carrying the 2D landmark correspondences.
    triangles : (T, 3) uint32
        Triangle topology, used only for viewer rendering.
    """

    model_id: str
    mean_shape: np.ndarray
    id_basis: np.ndarray
    id_stddev: np.ndarray
    exp_basis: np.ndarray
    exp_stddev: np.ndarray
    landmark_indices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        # Normalize dtypes once; arrays are treated as read-only afterwards.
        conv = {
            "mean_shape": np.float64,
            "id_basis": np.float64,
            "id_stddev": np.float64,
            "exp_basis": np.float64,
            "exp_stddev": np.float64,
            "landmark_indices": np.uint32,
            "triangles": np.uint32,
        }
        for name, dtype in conv.items():
            arr = np.asarray(getattr(self, name), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_vertices(self) -> int:
        return self.mean_shape.shape[0] // 3

    @property
    def k_id(self) -> int:
        return self.id_basis.shape[1]

    @property
    def k_exp(self) -> int:
        return self.exp_basis.shape[1]

    @property
    def n_landmarks(self) -> int:
        return self.landmark_indices.shape[0]

    def landmark_mean(self) -> np.ndarray:
        """Mean-shape landmark positions as a (3, L) matrix."""
        return self.mean_shape.reshape(-1, 3)[self.landmark_indices].T

    def landmark_basis(self) -> np.ndarray:
        """Stacked [id | exp] basis restricted to landmark vertices, (3L, K_id+K_exp)."""
        rows = (3 * self.landmark_indices[:, None] + np.arange(3)[None, :]).reshape(-1)
        return np.hstack([self.id_basis[rows], self.exp_basis[rows]])


def _check_orthonormal(basis: np.ndarray, label: str) -> None:
    norms = np.linalg.norm(basis, axis=0)
    if np.any(np.abs(norms - 1.0) > _UNIT_NORM_TOL):
        raise InvariantViolation(f"{label}: column norms deviate from 1 by up to "
                                 f"{np.abs(norms - 1.0).max():.3e}")
    gram = basis.T @ basis
    off = gram - np.diag(np.diag(gram))
    if np.any(np.abs(off) > _ORTHO_TOL):
        raise InvariantViolation(f"{label}: columns not orthogonal (max inner product "
                                 f"{np.abs(off).max():.3e})")


def validate_model(model: MorphableModel) -> MorphableModel:
    """Check every structural invariant; raises InvariantViolation on failure."""
    n = model.n_vertices
    if model.mean_shape.ndim != 1 or model.mean_shape.shape[0] != 3 * n or n == 0:
        raise InvariantViolation("mean_shape must be a non-empty length-3N vector")
    if not np.all(np.isfinite(model.mean_shape)):
        raise InvariantViolation("mean_shape contains non-finite values")
    for basis, stddev, label in (
        (model.id_basis, model.id_stddev, "id_basis"),
        (model.exp_basis, model.exp_stddev, "exp_basis"),
    ):
        if basis.ndim != 2 or basis.shape[0] != 3 * n or basis.shape[1] == 0:
            raise InvariantViolation(f"{label} must be 3N x K with K >= 1")
        if not np.all(np.isfinite(basis)):
            raise InvariantViolation(f"{label} contains non-finite values")
        if stddev.shape != (basis.shape[1],) or np.any(~np.isfinite(stddev)) or np.any(stddev <= 0):
            raise InvariantViolation(f"{label}: stddev must be positive, length K")
        _check_orthonormal(basis, label)
    lmk = model.landmark_indices
    if lmk.ndim != 1 or lmk.shape[0] < 4:
        raise InvariantViolation("need at least 4 landmark indices")
    if np.unique(lmk).shape[0] != lmk.shape[0]:
        raise InvariantViolation("landmark indices must be distinct")
    if np.any(lmk >= n):
        raise InvariantViolation("landmark index out of range")
    tri = model.triangles
    if tri.ndim != 2 or tri.shape[1] != 3:
        raise InvariantViolation("triangles must be a T x 3 index list")
    if tri.size and tri.max() >= n:
        raise InvariantViolation("triangle references an invalid vertex")
    return model


def _check_lengths(model: MorphableModel, coeffs: Coefficients) -> None:
    if coeffs.identity.shape[0] != model.k_id or coeffs.expression.shape[0] != model.k_exp:
        raise DimensionMismatch(
            f"coefficients ({coeffs.identity.shape[0]}, {coeffs.expression.shape[0]}) do not "
            f"match model bases ({model.k_id}, {model.k_exp})")


def reconstruct_mesh(model: MorphableModel, coeffs: Coefficients) -> np.ndarray:
    """Reconstruct the full vertex vector ``mean + id_basis @ p + exp_basis @ q``.

    Returns a length-3N float64 array. No clamping is applied anywhere; the
    reconstruction is exactly linear in the coefficients.
    """
    _check_lengths(model, coeffs)
    return model.mean_shape + model.id_basis @ coeffs.identity + model.exp_basis @ coeffs.expression


def exaggerate(coeffs: Coefficients, gamma_exp: float, gamma_id: float = 1.0) -> Coefficients:
    """Scale coefficients for caricature display.

    Expression weights are multiplied by ``gamma_exp`` and identity weights
    (the deviation from the mean face) by ``gamma_id``. Values are not clamped.
    """
    gamma_exp = float(gamma_exp)
    gamma_id = float(gamma_id)
    if not (np.isfinite(gamma_exp) and np.isfinite(gamma_id)) or gamma_exp < 0 or gamma_id < 0:
        raise InvalidConfig("exaggeration factors must be finite and >= 0")
    return Coefficients(gamma_id * coeffs.identity, gamma_exp * coeffs.expression)


def _orthonormal_columns(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Orthonormalize a seeded Gaussian matrix; column signs are normalized
    (largest-magnitude entry positive) so output is platform-independent."""
    q, _ = np.linalg.qr(rng.normal(size=(rows, cols)))
    signs = np.sign(q[np.abs(q).argmax(axis=0), np.arange(cols)])
    signs[signs == 0] = 1.0
    return q * signs


def synthesize_model(
    seed: int,
    n_vertices: int,
    k_id: int,
    k_exp: int,
    n_landmarks: int,
    model_id: str = "global",
) -> MorphableModel:
    """Build a deterministic synthetic model with the full structure of a real one.

    The mean shape is a unit-sphere point cloud scaled to ~100 model units with
    a small seeded perturbation; bases are orthonormalized seeded Gaussian
    matrices; stddevs decay geometrically (ratio 0.9) from 10 (identity) and
    5 (expression); landmark indices are distinct seeded draws. Triangles come
    from the convex hull of the mean cloud, giving the viewer a closed surface.
    """
    if n_landmarks < 4 or n_vertices < n_landmarks:
        raise InvalidConfig("need n_vertices >= n_landmarks >= 4")
    if k_id < 1 or k_exp < 1:
        raise InvalidConfig("need at least one component per basis")
    if k_id + k_exp >= 2 * n_landmarks:
        raise InvalidConfig("k_id + k_exp must stay below 2 * n_landmarks "
                            "so the landmark system is overdetermined")

    rng = np.random.default_rng(seed)
    directions = rng.normal(size=(n_vertices, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    positions = 100.0 * directions + rng.normal(scale=2.0, size=(n_vertices, 3))

    id_basis = _orthonormal_columns(rng, 3 * n_vertices, k_id)
    exp_basis = _orthonormal_columns(rng, 3 * n_vertices, k_exp)
    id_stddev = 10.0 * 0.9 ** np.arange(k_id)
    exp_stddev = 5.0 * 0.9 ** np.arange(k_exp)
    landmark_indices = rng.choice(n_vertices, size=n_landmarks, replace=False)

    from scipy.spatial import ConvexHull  # local import: only needed here

    triangles = ConvexHull(positions).simplices.astype(np.uint32)

    return validate_model(MorphableModel(
        model_id=model_id,
        mean_shape=positions.reshape(-1),
        id_basis=id_basis,
        id_stddev=id_stddev,
        exp_basis=exp_basis,
        exp_stddev=exp_stddev,
        landmark_indices=landmark_indices,
        triangles=triangles,
    ))
