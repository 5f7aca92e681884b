"""Live session server: replays a landmark sequence through the fitter and
streams pose + coefficients to interactive viewers.

Transport is WebSocket (one JSON object per text message, newline-terminated);
the default port is 7464, overridable by flag or the M4D_PORT environment
variable. Each connection gets an independent session state machine, processed
strictly sequentially: inbound control messages and outbound frame emission
serialize on the session. Sessions share only the immutable model registry.

Protocol
--------
client -> server: set_options, play, pause, seek {frame}, list_models
server -> client: hello {protocol}, options_ack, model_info, frame,
                  dropped_frame, error {code}, models {ids}

Every inbound message yields exactly one options_ack / models / error reply;
set_options additionally triggers model_info when the model changed. Frames
stream only while playing, at options.playback_fps. Vertex data is never sent
per frame: the client reconstructs meshes from model_info bases plus the
streamed coefficients.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidConfig, RankDeficient, TooFewLandmarks
from .fitting import FitConfig, fit_frame
from .model import MorphableModel, exaggerate
from .registry import ModelRegistry
from .sequences import LandmarkSequence
from .smoothing import SmootherState, push_and_smooth

__all__ = [
    "DEFAULT_PORT",
    "SessionOptions",
    "SessionState",
    "handle_message",
    "emit_frame",
    "model_info_message",
    "create_server",
    "serve",
]

logger = logging.getLogger(__name__)

DEFAULT_PORT = 7464
PROTOCOL_VERSION = 1

# error codes
UNKNOWN_TYPE = "UNKNOWN_TYPE"
UNKNOWN_MODEL = "UNKNOWN_MODEL"
BAD_VALUE = "BAD_VALUE"


@dataclass(frozen=True)
class SessionOptions:
    """Live controls: active model, caricature factor, overlays, playback."""

    model_id: str = "global"
    exaggeration: float = 1.0
    show_landmarks: bool = False
    show_bbox: bool = False
    smoothing_enabled: bool = True
    playback_fps: float = 30.0

    def as_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "exaggeration": self.exaggeration,
            "show_landmarks": self.show_landmarks,
            "show_bbox": self.show_bbox,
            "smoothing_enabled": self.smoothing_enabled,
            "playback_fps": self.playback_fps,
        }


@dataclass
class SessionState:
    """One connected session: options, smoother, playback cursor, resolved model."""

    registry: ModelRegistry
    sequence: LandmarkSequence
    options: SessionOptions = field(default_factory=SessionOptions)
    fit_config: FitConfig = field(default_factory=FitConfig)
    model: MorphableModel | None = None  # resolved from options.model_id
    smoother: SmootherState = field(default_factory=SmootherState)
    cursor: int = 0
    playing: bool = False

    def __post_init__(self):
        if self.model is None:
            self.model = self.registry.get(self.options.model_id)


def _error(code: str, message: str) -> dict:
    return {"type": "error", "code": code, "message": message}


def _ack(state: SessionState) -> dict:
    return {
        "type": "options_ack",
        "options": state.options.as_dict(),
        "playing": state.playing,
        "frame": state.cursor,
    }


def model_info_message(model: MorphableModel) -> dict:
    """Everything a client needs to reconstruct meshes locally.

    Bases ship in full (column-major flattened, index = row + 3N * column),
    which stays a few MB at desk-scale vertex counts.
    """
    return {
        "type": "model_info",
        "model_id": model.model_id,
        "n_vertices": model.n_vertices,
        "k_id": model.k_id,
        "k_exp": model.k_exp,
        "n_landmarks": model.n_landmarks,
        "mean_shape": model.mean_shape.tolist(),
        "id_basis": model.id_basis.reshape(-1, order="F").tolist(),
        "exp_basis": model.exp_basis.reshape(-1, order="F").tolist(),
        "triangles": model.triangles.tolist(),
    }


def _apply_set_options(state: SessionState, message: dict) -> list[dict]:
    """Validate every field first, then apply atomically; unknown fields ignored."""
    updates: dict = {}
    if "model_id" in message:
        model_id = message["model_id"]
        if not isinstance(model_id, str):
            return [_error(BAD_VALUE, "model_id must be a string")]
        if model_id not in state.registry:
            return [_error(UNKNOWN_MODEL, f"unknown model {model_id!r}")]
        updates["model_id"] = model_id
    if "exaggeration" in message:
        value = message["exaggeration"]
        if not isinstance(value, (int, float)) or isinstance(value, bool) \
                or not np.isfinite(value) or not 0.0 <= value <= 4.0:
            return [_error(BAD_VALUE, "exaggeration must lie in [0, 4]")]
        updates["exaggeration"] = float(value)
    for flag in ("show_landmarks", "show_bbox", "smoothing_enabled"):
        if flag in message:
            if not isinstance(message[flag], bool):
                return [_error(BAD_VALUE, f"{flag} must be a boolean")]
            updates[flag] = message[flag]
    if "playback_fps" in message:
        value = message["playback_fps"]
        if not isinstance(value, (int, float)) or isinstance(value, bool) \
                or not np.isfinite(value) or value <= 0:
            return [_error(BAD_VALUE, "playback_fps must be positive")]
        updates["playback_fps"] = float(value)

    model_changed = "model_id" in updates and updates["model_id"] != state.options.model_id
    state.options = replace(state.options, **updates)
    out: list[dict] = [_ack(state)]
    if model_changed:
        state.model = state.registry.get(state.options.model_id)
        state.smoother.reset()
        out.append(model_info_message(state.model))
    return out


def handle_message(state: SessionState, message) -> list[dict]:
    """Process one inbound message, mutating the session; returns the replies.

    Every message produces exactly one ack or error (model_info may follow an
    ack). Unknown message types are rejected; the session survives any input.
    """
    if not isinstance(message, dict):
        return [_error(BAD_VALUE, "message must be a JSON object")]
    msg_type = message.get("type")
    if msg_type == "set_options":
        return _apply_set_options(state, message)
    if msg_type == "play":
        state.playing = True
        return [_ack(state)]
    if msg_type == "pause":
        state.playing = False
        return [_ack(state)]
    if msg_type == "seek":
        frame = message.get("frame")
        if not isinstance(frame, int) or isinstance(frame, bool) \
                or not 0 <= frame < len(state.sequence):
            return [_error(BAD_VALUE, f"frame must lie in [0, {len(state.sequence)})")]
        state.cursor = frame
        state.smoother.reset()
        return [_ack(state)]
    if msg_type == "list_models":
        return [{"type": "models", "ids": state.registry.ids()}]
    return [_error(UNKNOWN_TYPE, f"unknown message type {msg_type!r}")]


def emit_frame(state: SessionState) -> dict:
    """Fit the frame under the cursor, smooth, exaggerate, and build the message.

    Advances the cursor (wrapping at the end of the sequence). Frames the
    fitter rejects produce a dropped_frame message instead.
    """
    frame = state.sequence.frames[state.cursor]
    state.cursor = (state.cursor + 1) % len(state.sequence)
    try:
        fit = fit_frame(frame, state.model, state.fit_config)
    except (TooFewLandmarks, RankDeficient) as exc:
        return {"type": "dropped_frame", "t": frame.timestamp_ms, "dropped": True,
                "reason": f"{type(exc).__name__}: {exc}"}
    if state.options.smoothing_enabled:
        fit = push_and_smooth(state.smoother, fit)
    coeffs = exaggerate(fit.coeffs, state.options.exaggeration)

    message = {
        "type": "frame",
        "t": frame.timestamp_ms,
        "pose": {
            "rho": fit.pose.scale,
            "R": fit.pose.rotation.reshape(-1).tolist(),
            "t2": fit.pose.translation.tolist(),
        },
        "p": coeffs.identity.tolist(),
        "q": coeffs.expression.tolist(),
        "rmse": fit.reprojection_rmse,
    }
    if state.options.show_landmarks:
        # [x, y, confidence] triplets; zero-confidence coordinates are meaningless.
        message["landmarks"] = np.hstack([frame.points, frame.confidence[:, None]]).tolist()
    if state.options.show_bbox:
        valid = frame.confidence >= state.fit_config.confidence_floor
        if np.any(valid):
            pts = frame.points[valid]
            message["bbox"] = [float(pts[:, 0].min()), float(pts[:, 1].min()),
                               float(pts[:, 0].max()), float(pts[:, 1].max())]
    return message


def _session_loop(connection, registry: ModelRegistry, sequence: LandmarkSequence,
                  fit_config: FitConfig) -> None:
    """Sequential per-connection loop: poll for messages, pace frame emission."""
    from websockets.exceptions import ConnectionClosed

    def send(obj: dict) -> None:
        connection.send(json.dumps(obj) + "\n")

    state = SessionState(registry=registry, sequence=sequence, fit_config=fit_config)
    send({"type": "hello", "protocol": PROTOCOL_VERSION})
    send(model_info_message(state.model))

    next_deadline: float | None = None
    while True:
        if state.playing and next_deadline is None:
            next_deadline = time.monotonic()
        if not state.playing:
            next_deadline = None
        try:
            if next_deadline is None:
                raw = connection.recv()
            else:
                timeout = next_deadline - time.monotonic()
                if timeout <= 0:
                    raise TimeoutError
                raw = connection.recv(timeout=timeout)
        except TimeoutError:
            send(emit_frame(state))
            interval = 1.0 / state.options.playback_fps
            next_deadline += interval
            if next_deadline < time.monotonic() - interval:  # fell behind; resync
                next_deadline = time.monotonic()
            continue
        except ConnectionClosed:
            return

        for chunk in str(raw).splitlines():  # tolerate newline-delimited batches
            if not chunk.strip():
                continue
            try:
                message = json.loads(chunk)
            except json.JSONDecodeError as exc:
                send(_error(BAD_VALUE, f"malformed JSON: {exc.msg}"))
                continue
            for reply in handle_message(state, message):
                send(reply)


def create_server(registry: ModelRegistry, sequence: LandmarkSequence,
                  port: int = DEFAULT_PORT, fit_config: FitConfig = FitConfig(),
                  host: str = ""):
    """Bind the listening socket and return the WebSocket server object.

    The caller drives it with ``serve_forever()`` and stops it with
    ``shutdown()`` (from another thread).
    """
    from websockets.sync.server import serve as ws_serve

    if not sequence.frames:
        raise InvalidConfig("cannot serve an empty sequence")

    def handler(connection):
        peer = getattr(connection, "remote_address", None)
        logger.info("session opened from %s", peer)
        try:
            _session_loop(connection, registry, sequence, fit_config)
        finally:
            logger.info("session closed for %s", peer)

    return ws_serve(handler, host, port)


def serve(registry: ModelRegistry, sequence: LandmarkSequence, port: int = DEFAULT_PORT,
          fit_config: FitConfig = FitConfig(), host: str = ""):
    """Run the WebSocket server until interrupted."""
    with create_server(registry, sequence, port, fit_config, host) as server:
        logger.info("listening on port %d (%d models, %d frames)",
                    port, len(registry), len(sequence))
        server.serve_forever()
