/** Wire protocol: one JSON object per WebSocket text message. */

export interface SessionOptions {
  model_id: string;
  exaggeration: number;
  show_landmarks: boolean;
  show_bbox: boolean;
  smoothing_enabled: boolean;
  playback_fps: number;
}

export interface HelloMsg {
  type: "hello";
  protocol: number;
}

export interface OptionsAckMsg {
  type: "options_ack";
  options: SessionOptions;
  playing: boolean;
  frame: number;
}

export interface ModelInfoMsg {
  type: "model_info";
  model_id: string;
  n_vertices: number;
  k_id: number;
  k_exp: number;
  n_landmarks: number;
  /** length 3N, interleaved xyz */
  mean_shape: number[];
  /** length 3N * k_id, column-major: entry(row, col) = id_basis[row + 3N * col] */
  id_basis: number[];
  exp_basis: number[];
  triangles: number[][];
}

export interface PoseMsg {
  rho: number;
  /** row-major 3x3 */
  R: number[];
  t2: number[];
}

export interface FrameMsg {
  type: "frame";
  t: number;
  pose: PoseMsg;
  p: number[];
  q: number[];
  rmse: number;
  /** [x, y, confidence] per landmark, present only when toggled on */
  landmarks?: number[][];
  /** [x0, y0, x1, y1], present only when toggled on */
  bbox?: number[];
}

export interface DroppedFrameMsg {
  type: "dropped_frame";
  t: number;
  dropped: true;
  reason: string;
}

export interface ErrorMsg {
  type: "error";
  code: "UNKNOWN_TYPE" | "UNKNOWN_MODEL" | "BAD_VALUE";
  message: string;
}

export interface ModelsMsg {
  type: "models";
  ids: string[];
}

export type ServerMessage =
  | HelloMsg
  | OptionsAckMsg
  | ModelInfoMsg
  | FrameMsg
  | DroppedFrameMsg
  | ErrorMsg
  | ModelsMsg;

export type ClientMessage =
  | { type: "set_options" } & Partial<SessionOptions>
  | { type: "play" }
  | { type: "pause" }
  | { type: "seek"; frame: number }
  | { type: "list_models" };

export type ParseResult =
  | { ok: true; message: ServerMessage }
  | { ok: false; error: string };

const SERVER_TYPES = new Set([
  "hello", "options_ack", "model_info", "frame", "dropped_frame", "error", "models",
]);

function isNumberArray(value: unknown, length?: number): value is number[] {
  return Array.isArray(value)
    && (length === undefined || value.length === length)
    && value.every((x) => typeof x === "number" && Number.isFinite(x));
}

/** Parse and validate one wire message; never throws. */
export function parseServerMessage(text: string): ParseResult {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (exc) {
    return { ok: false, error: `malformed JSON from server: ${exc}` };
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    return { ok: false, error: "server message is not an object" };
  }
  const msg = raw as Record<string, unknown>;
  if (typeof msg.type !== "string" || !SERVER_TYPES.has(msg.type)) {
    return { ok: false, error: `unknown server message type ${JSON.stringify(msg.type)}` };
  }
  switch (msg.type) {
    case "frame": {
      const pose = msg.pose as Record<string, unknown> | undefined;
      if (!pose || typeof pose.rho !== "number" || !isNumberArray(pose.R, 9)
        || !isNumberArray(pose.t2, 2)) {
        return { ok: false, error: "frame message has a malformed pose" };
      }
      if (!isNumberArray(msg.p) || !isNumberArray(msg.q) || typeof msg.rmse !== "number") {
        return { ok: false, error: "frame message has malformed coefficients" };
      }
      break;
    }
    case "model_info": {
      const n = msg.n_vertices;
      if (typeof n !== "number"
        || !isNumberArray(msg.mean_shape, 3 * (n as number))
        || !isNumberArray(msg.id_basis, 3 * (n as number) * (msg.k_id as number))
        || !isNumberArray(msg.exp_basis, 3 * (n as number) * (msg.k_exp as number))) {
        return { ok: false, error: "model_info arrays inconsistent with counts" };
      }
      break;
    }
    case "options_ack":
      if (typeof msg.options !== "object" || msg.options === null) {
        return { ok: false, error: "options_ack without options" };
      }
      break;
    case "error":
      if (typeof msg.code !== "string") {
        return { ok: false, error: "error message without code" };
      }
      break;
    case "models":
      if (!Array.isArray(msg.ids) || !msg.ids.every((x) => typeof x === "string")) {
        return { ok: false, error: "models message without ids" };
      }
      break;
  }
  return { ok: true, message: msg as unknown as ServerMessage };
}

export function encodeClientMessage(message: ClientMessage): string {
  return JSON.stringify(message) + "\n";
}
