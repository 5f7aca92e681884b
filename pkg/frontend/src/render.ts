/** Flat-shaded canvas renderer plus the 2D landmark overlay panel. */

import type { RenderableFrame } from "./reconstruct.js";

export interface ViewTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

/** Bounding box [x0, y0, x1, y1] over the screen-space xy of posed vertices. */
export function screenExtent(vertices: Float64Array): number[] {
  let x0 = Infinity, y0 = Infinity, x1 = -Infinity, y1 = -Infinity;
  for (let i = 0; i < vertices.length; i += 3) {
    if (vertices[i] < x0) x0 = vertices[i];
    if (vertices[i] > x1) x1 = vertices[i];
    if (vertices[i + 1] < y0) y0 = vertices[i + 1];
    if (vertices[i + 1] > y1) y1 = vertices[i + 1];
  }
  return [x0, y0, x1, y1];
}

/** Fit an extent into a canvas with a margin; preserves aspect ratio. */
export function fitTransform(extent: number[], width: number, height: number,
                             margin = 0.15): ViewTransform {
  const [x0, y0, x1, y1] = extent;
  const spanX = Math.max(x1 - x0, 1e-9);
  const spanY = Math.max(y1 - y0, 1e-9);
  const scale = (1 - 2 * margin) * Math.min(width / spanX, height / spanY);
  return {
    scale,
    offsetX: width / 2 - scale * (x0 + x1) / 2,
    offsetY: height / 2 - scale * (y0 + y1) / 2,
  };
}

export class MeshRenderer {
  private view: ViewTransform | null = null;

  constructor(private canvas: HTMLCanvasElement) {}

  resetView(): void {
    this.view = null;
  }

  draw(frame: RenderableFrame, triangles: Uint32Array): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.fillStyle = "#10141a";
    ctx.fillRect(0, 0, width, height);

    if (this.view === null) {
      this.view = fitTransform(screenExtent(frame.vertices), width, height);
    }
    const { scale, offsetX, offsetY } = this.view;
    const v = frame.vertices;

    // painter's algorithm: depth grows away from the camera, so draw the
    // largest mean depth first and let nearer triangles overwrite it
    const order: { t: number; depth: number }[] = [];
    for (let t = 0; t < triangles.length; t += 3) {
      const depth = (v[3 * triangles[t] + 2] + v[3 * triangles[t + 1] + 2]
        + v[3 * triangles[t + 2] + 2]) / 3;
      order.push({ t, depth });
    }
    order.sort((a, b) => b.depth - a.depth);

    for (const { t } of order) {
      const a = 3 * triangles[t], b = 3 * triangles[t + 1], c = 3 * triangles[t + 2];
      // screen-space normal z for shading and backface culling
      const nz = (v[b] - v[a]) * (v[c + 1] - v[a + 1]) - (v[b + 1] - v[a + 1]) * (v[c] - v[a]);
      const area = Math.abs(nz);
      if (area < 1e-12) continue;
      const edge1 = Math.hypot(v[b] - v[a], v[b + 1] - v[a + 1], v[b + 2] - v[a + 2]);
      const edge2 = Math.hypot(v[c] - v[a], v[c + 1] - v[a + 1], v[c + 2] - v[a + 2]);
      const shade = Math.min(1, area / Math.max(edge1 * edge2, 1e-12));
      const level = Math.round(60 + 175 * shade);
      ctx.fillStyle = `rgb(${level * 0.85}, ${level * 0.78}, ${level * 0.72})`;
      ctx.beginPath();
      ctx.moveTo(scale * v[a] + offsetX, scale * v[a + 1] + offsetY);
      ctx.lineTo(scale * v[b] + offsetX, scale * v[b + 1] + offsetY);
      ctx.lineTo(scale * v[c] + offsetX, scale * v[c + 1] + offsetY);
      ctx.closePath();
      ctx.fill();
    }

    if (frame.dropped) {
      ctx.fillStyle = "#ff5555";
      ctx.font = "14px sans-serif";
      ctx.fillText(`frame dropped: ${frame.droppedReason ?? ""}`, 12, 22);
    }
  }
}

export class OverlayRenderer {
  private view: ViewTransform | null = null;

  constructor(private canvas: HTMLCanvasElement) {}

  resetView(): void {
    this.view = null;
  }

  draw(frame: RenderableFrame): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.fillStyle = "#181c24";
    ctx.fillRect(0, 0, width, height);
    if (!frame.landmarks && !frame.bbox) {
      ctx.fillStyle = "#667";
      ctx.font = "13px sans-serif";
      ctx.fillText("landmark / bbox overlays off", 12, 22);
      return;
    }

    const points = (frame.landmarks ?? []).filter((lm) => lm[2] > 0);
    if (this.view === null) {
      const xs = points.map((lm) => lm[0]).concat(frame.bbox ? [frame.bbox[0], frame.bbox[2]] : []);
      const ys = points.map((lm) => lm[1]).concat(frame.bbox ? [frame.bbox[1], frame.bbox[3]] : []);
      if (xs.length === 0) return;
      this.view = fitTransform(
        [Math.min(...xs), Math.min(...ys), Math.max(...xs), Math.max(...ys)],
        width, height);
    }
    const { scale, offsetX, offsetY } = this.view;

    if (frame.bbox) {
      const [x0, y0, x1, y1] = frame.bbox;
      ctx.strokeStyle = "#58a6ff";
      ctx.lineWidth = 1.5;
      ctx.strokeRect(scale * x0 + offsetX, scale * y0 + offsetY,
        scale * (x1 - x0), scale * (y1 - y0));
    }
    ctx.fillStyle = "#7ce38b";
    for (const lm of points) {
      ctx.beginPath();
      ctx.arc(scale * lm[0] + offsetX, scale * lm[1] + offsetY, 2.2, 0, 2 * Math.PI);
      ctx.fill();
    }
  }
}
