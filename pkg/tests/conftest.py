from __future__ import annotations

import numpy as np
import pytest

from face4d import synthesize_model


@pytest.fixture(scope="session")
def model_small():
    """Quick model for unit tests: 300 vertices, 8+4 components, 20 landmarks."""
    return synthesize_model(seed=11, n_vertices=300, k_id=8, k_exp=4, n_landmarks=20)


@pytest.fixture(scope="session")
def model_desk():
    """Desk-scale model matching the verification setup (N=2000, 40+20, L=68)."""
    return synthesize_model(seed=7, n_vertices=2000, k_id=40, k_exp=20, n_landmarks=68)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform-ish random rotation via QR of a Gaussian matrix, det fixed to +1."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 2] *= -1
    return q
