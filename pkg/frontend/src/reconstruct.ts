/** Client-side mesh reconstruction from streamed coefficients.
 *
 * The server never streams vertices: each frame carries identity (p) and
 * expression (q) weights, and vertices are rebuilt locally as
 * mean + id_basis * p + exp_basis * q against the bases delivered once in
 * model_info (column-major flattened).
 */

import type { DroppedFrameMsg, FrameMsg, ModelInfoMsg, PoseMsg } from "./protocol.js";

export class ClientModel {
  readonly modelId: string;
  readonly nVertices: number;
  readonly kId: number;
  readonly kExp: number;
  readonly nLandmarks: number;
  readonly mean: Float64Array;
  readonly idBasis: Float64Array;   // column-major, entry(i, k) = idBasis[i + 3N * k]
  readonly expBasis: Float64Array;
  readonly triangles: Uint32Array;  // flattened T x 3

  constructor(info: ModelInfoMsg) {
    const n3 = 3 * info.n_vertices;
    if (info.mean_shape.length !== n3
      || info.id_basis.length !== n3 * info.k_id
      || info.exp_basis.length !== n3 * info.k_exp) {
      throw new Error("model_info arrays inconsistent with vertex/component counts");
    }
    this.modelId = info.model_id;
    this.nVertices = info.n_vertices;
    this.kId = info.k_id;
    this.kExp = info.k_exp;
    this.nLandmarks = info.n_landmarks;
    this.mean = Float64Array.from(info.mean_shape);
    this.idBasis = Float64Array.from(info.id_basis);
    this.expBasis = Float64Array.from(info.exp_basis);
    this.triangles = new Uint32Array(info.triangles.length * 3);
    info.triangles.forEach((tri, t) => {
      if (tri.length !== 3 || tri.some((v) => v < 0 || v >= info.n_vertices)) {
        throw new Error(`triangle ${t} references an invalid vertex`);
      }
      this.triangles.set(tri, 3 * t);
    });
  }

  /** mean + id_basis p + exp_basis q, as interleaved xyz. */
  reconstruct(p: number[], q: number[]): Float64Array {
    if (p.length !== this.kId || q.length !== this.kExp) {
      throw new Error(`coefficient lengths (${p.length}, ${q.length}) do not match `
        + `model (${this.kId}, ${this.kExp})`);
    }
    const n3 = 3 * this.nVertices;
    const out = Float64Array.from(this.mean);
    for (let k = 0; k < this.kId; k++) {
      const weight = p[k];
      if (weight === 0) continue;
      const offset = n3 * k;
      for (let i = 0; i < n3; i++) out[i] += weight * this.idBasis[offset + i];
    }
    for (let k = 0; k < this.kExp; k++) {
      const weight = q[k];
      if (weight === 0) continue;
      const offset = n3 * k;
      for (let i = 0; i < n3; i++) out[i] += weight * this.expBasis[offset + i];
    }
    return out;
  }
}

/** Scaled orthographic display transform: x,y are screen pixels, z keeps
 * rho-scaled depth for sorting and shading. */
export function applyPose(vertices: Float64Array, pose: PoseMsg): Float64Array {
  const r = pose.R;
  const [tx, ty] = pose.t2;
  const rho = pose.rho;
  const out = new Float64Array(vertices.length);
  for (let i = 0; i < vertices.length; i += 3) {
    const x = vertices[i], y = vertices[i + 1], z = vertices[i + 2];
    out[i] = rho * (r[0] * x + r[1] * y + r[2] * z) + tx;
    out[i + 1] = rho * (r[3] * x + r[4] * y + r[5] * z) + ty;
    out[i + 2] = rho * (r[6] * x + r[7] * y + r[8] * z);
  }
  return out;
}

export interface RenderableFrame {
  /** posed vertices, interleaved [screenX, screenY, depth] */
  vertices: Float64Array;
  timestamp: number;
  rmse: number;
  landmarks: number[][] | null;
  bbox: number[] | null;
  /** true while showing a retained mesh after a dropped frame */
  dropped: boolean;
  droppedReason: string | null;
}

/** Applies frame messages to the current model; a dropped frame retains the
 * previous mesh and raises the dropped indicator. */
export class FrameApplier {
  private last: RenderableFrame | null = null;

  constructor(private model: ClientModel) {}

  setModel(model: ClientModel): void {
    this.model = model;
    this.last = null;
  }

  apply(message: FrameMsg | DroppedFrameMsg): RenderableFrame | null {
    if (message.type === "dropped_frame") {
      if (this.last === null) return null;  // nothing to retain yet
      this.last = {
        ...this.last,
        timestamp: message.t,
        dropped: true,
        droppedReason: message.reason,
      };
      return this.last;
    }
    const vertices = applyPose(this.model.reconstruct(message.p, message.q), message.pose);
    this.last = {
      vertices,
      timestamp: message.t,
      rmse: message.rmse,
      landmarks: message.landmarks ?? null,
      bbox: message.bbox ?? null,
      dropped: false,
      droppedReason: null,
    };
    return this.last;
  }
}
