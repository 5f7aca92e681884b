/** DOM wiring: WebSocket connection, controls, and the two render panels. */

import { encodeClientMessage, parseServerMessage } from "./protocol.js";
import type { ModelInfoMsg, ServerMessage } from "./protocol.js";
import { ClientModel, FrameApplier } from "./reconstruct.js";
import { MeshRenderer, OverlayRenderer } from "./render.js";
import { SessionController } from "./session.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function showBanner(text: string | null): void {
  const banner = el<HTMLDivElement>("banner");
  banner.textContent = text ?? "";
  banner.style.display = text ? "block" : "none";
}

function main(): void {
  const params = new URLSearchParams(window.location.search);
  const port = params.get("port") ?? "7464";
  const host = params.get("host") ?? (window.location.hostname || "localhost");
  const socket = new WebSocket(`ws://${host}:${port}/`);

  const controller = new SessionController((message) =>
    socket.send(encodeClientMessage(message)));
  const meshRenderer = new MeshRenderer(el<HTMLCanvasElement>("mesh"));
  const overlayRenderer = new OverlayRenderer(el<HTMLCanvasElement>("overlay"));

  let model: ClientModel | null = null;
  let applier: FrameApplier | null = null;

  const modelSelect = el<HTMLSelectElement>("model");
  const exagSlider = el<HTMLInputElement>("exaggeration");
  const exagValue = el<HTMLSpanElement>("exaggeration-value");
  const landmarksToggle = el<HTMLInputElement>("show-landmarks");
  const bboxToggle = el<HTMLInputElement>("show-bbox");
  const smoothingToggle = el<HTMLInputElement>("smoothing");
  const playButton = el<HTMLButtonElement>("play");
  const pauseButton = el<HTMLButtonElement>("pause");
  const seekInput = el<HTMLInputElement>("seek");
  const seekButton = el<HTMLButtonElement>("seek-go");
  const status = el<HTMLSpanElement>("status");

  controller.onChange((state) => {
    const controls = [modelSelect, exagSlider, landmarksToggle, bboxToggle,
      smoothingToggle, playButton, pauseButton, seekButton];
    for (const control of controls) control.disabled = state.pending;
    if (state.models.length && modelSelect.options.length !== state.models.length) {
      modelSelect.innerHTML = "";
      for (const id of state.models) {
        const option = document.createElement("option");
        option.value = option.textContent = id;
        modelSelect.appendChild(option);
      }
    }
    // the UI shows only acked state; an error reverts the widgets
    if (state.options) {
      modelSelect.value = state.options.model_id;
      exagSlider.value = String(state.options.exaggeration);
      exagValue.textContent = state.options.exaggeration.toFixed(1);
      landmarksToggle.checked = state.options.show_landmarks;
      bboxToggle.checked = state.options.show_bbox;
      smoothingToggle.checked = state.options.smoothing_enabled;
    }
    showBanner(state.lastError
      ? `${state.lastError.code}: ${state.lastError.message}` : null);
  });

  modelSelect.addEventListener("change", () =>
    controller.requestOptions({ model_id: modelSelect.value }));
  exagSlider.addEventListener("input", () =>
    controller.requestOptions({ exaggeration: Number(exagSlider.value) }));
  landmarksToggle.addEventListener("change", () =>
    controller.requestOptions({ show_landmarks: landmarksToggle.checked }));
  bboxToggle.addEventListener("change", () =>
    controller.requestOptions({ show_bbox: bboxToggle.checked }));
  smoothingToggle.addEventListener("change", () =>
    controller.requestOptions({ smoothing_enabled: smoothingToggle.checked }));
  playButton.addEventListener("click", () => controller.requestPlay());
  pauseButton.addEventListener("click", () => controller.requestPause());
  seekButton.addEventListener("click", () =>
    controller.requestSeek(Math.max(0, Math.floor(Number(seekInput.value) || 0))));

  function handle(message: ServerMessage): void {
    controller.handleServer(message);
    switch (message.type) {
      case "model_info": {
        model = new ClientModel(message as ModelInfoMsg);
        applier = new FrameApplier(model);
        meshRenderer.resetView();
        overlayRenderer.resetView();
        status.textContent = `model ${model.modelId} (${model.nVertices} vertices)`;
        break;
      }
      case "frame":
      case "dropped_frame": {
        if (!applier || !model) break;
        const frame = applier.apply(message);
        if (frame) {
          meshRenderer.draw(frame, model.triangles);
          overlayRenderer.draw(frame);
          if (!frame.dropped) {
            status.textContent = `t=${(frame.timestamp / 1000).toFixed(2)}s  `
              + `rmse=${frame.rmse.toFixed(3)}px`;
          }
        }
        break;
      }
    }
  }

  socket.addEventListener("open", () => {
    status.textContent = "connected";
    controller.requestModels();
  });
  socket.addEventListener("close", () => {
    status.textContent = "disconnected";
    showBanner("connection closed");
  });
  socket.addEventListener("message", (event) => {
    const result = parseServerMessage(String(event.data));
    if (!result.ok) {
      showBanner(result.error);  // visible banner, never a crash
      return;
    }
    handle(result.message);
  });
}

main();
