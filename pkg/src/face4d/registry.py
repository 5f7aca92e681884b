"""Registry of the global model plus bespoke demographic models."""

from __future__ import annotations

import logging
from pathlib import Path

from .errors import InvalidConfig
from .model import MorphableModel, synthesize_model
from .modelio import load_model

__all__ = ["RECOGNIZED_MODEL_IDS", "ModelRegistry", "load_registry", "synthesize_registry"]

logger = logging.getLogger(__name__)

# The global model plus the six bespoke demographic groups selectable at runtime.
RECOGNIZED_MODEL_IDS = (
    "global",
    "black-all",
    "chinese-all",
    "white-under7",
    "white-7to18",
    "white-18to50",
    "white-over50",
)


class ModelRegistry:
    """Immutable mapping of model_id to MorphableModel.

    Must contain "global"; only recognized ids are accepted.
    """

    def __init__(self, models: dict[str, MorphableModel]):
        for model_id in models:
            if model_id not in RECOGNIZED_MODEL_IDS:
                raise InvalidConfig(f"unrecognized model id {model_id!r}; expected one of "
                                    f"{sorted(RECOGNIZED_MODEL_IDS)}")
        if "global" not in models:
            raise InvalidConfig('registry must contain a "global" model')
        self._models = dict(models)

    def __contains__(self, model_id: str) -> bool:
        return model_id in self._models

    def __len__(self) -> int:
        return len(self._models)

    def get(self, model_id: str) -> MorphableModel:
        try:
            return self._models[model_id]
        except KeyError:
            raise KeyError(f"model {model_id!r} not in registry") from None

    def ids(self) -> list[str]:
        return sorted(self._models)


def load_registry(model_dir: str | Path) -> ModelRegistry:
    """Load every ``*.m4dm`` file under ``model_dir`` into a registry.

    Each file's embedded model_id is the registry key.
    """
    model_dir = Path(model_dir)
    if not model_dir.is_dir():
        raise InvalidConfig(f"model directory not found: {model_dir}")
    models: dict[str, MorphableModel] = {}
    for path in sorted(model_dir.glob("*.m4dm")):
        with open(path, "rb") as fh:
            model = load_model(fh)
        if model.model_id in models:
            raise InvalidConfig(f"duplicate model id {model.model_id!r} in {path.name}")
        models[model.model_id] = model
        logger.info("loaded model %r from %s (N=%d)", model.model_id, path.name, model.n_vertices)
    return ModelRegistry(models)


def synthesize_registry(
    seed: int = 0,
    n_vertices: int = 800,
    k_id: int = 20,
    k_exp: int = 10,
    n_landmarks: int = 68,
    model_ids: tuple[str, ...] = RECOGNIZED_MODEL_IDS,
) -> ModelRegistry:
    """Synthesize a full registry; each model gets a distinct seed offset."""
    models = {
        model_id: synthesize_model(seed + offset, n_vertices, k_id, k_exp, n_landmarks,
                                   model_id=model_id)
        for offset, model_id in enumerate(model_ids)
    }
    return ModelRegistry(models)
