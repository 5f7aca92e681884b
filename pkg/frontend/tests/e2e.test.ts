/** Live end-to-end check against a running engine, exercising the same
 * modules the browser uses (protocol parsing, session controller, client
 * reconstruction). Skipped unless FACE4D_E2E_PORT points at a server.
 */

import { describe, expect, it } from "vitest";
import { WebSocket } from "ws";

import { encodeClientMessage, parseServerMessage } from "../src/protocol.js";
import type { FrameMsg, ModelInfoMsg, ServerMessage } from "../src/protocol.js";
import { ClientModel, FrameApplier } from "../src/reconstruct.js";
import { SessionController } from "../src/session.js";

const port = process.env.FACE4D_E2E_PORT;

describe.skipIf(!port)("live session", () => {
  it("streams frames the client can reconstruct and render", async () => {
    const socket = new WebSocket(`ws://127.0.0.1:${port}/`);
    const inbox: ServerMessage[] = [];
    let fail: string | null = null;
    const waiters: (() => void)[] = [];

    socket.on("message", (data) => {
      const result = parseServerMessage(String(data));
      if (!result.ok) {
        fail = result.error;
      } else {
        inbox.push(result.message);
      }
      waiters.splice(0).forEach((wake) => wake());
    });
    await new Promise<void>((resolve, reject) => {
      socket.on("open", () => resolve());
      socket.on("error", reject);
    });

    async function next(type: string, timeoutMs = 10000): Promise<ServerMessage> {
      const deadline = Date.now() + timeoutMs;
      for (;;) {
        const index = inbox.findIndex((message) => message.type === type);
        if (index >= 0) return inbox.splice(index, 1)[0];
        if (fail) throw new Error(fail);
        if (Date.now() > deadline) throw new Error(`timeout waiting for ${type}`);
        await new Promise<void>((wake) => {
          waiters.push(wake);
          setTimeout(wake, 50);
        });
      }
    }

    const controller = new SessionController((message) =>
      socket.send(encodeClientMessage(message)));

    await next("hello");
    const info = (await next("model_info")) as ModelInfoMsg;
    const model = new ClientModel(info);
    const applier = new FrameApplier(model);

    controller.requestModels();
    const models = await next("models");
    expect((models as { ids: string[] }).ids).toContain("global");

    controller.requestPlay();
    controller.handleServer(await next("options_ack"));
    expect(controller.view().playing).toBe(true);

    let rendered = 0;
    for (let i = 0; i < 20; i++) {
      const frame = (await next("frame")) as FrameMsg;
      const renderable = applier.apply(frame);
      expect(renderable).not.toBeNull();
      expect(renderable!.vertices.length).toBe(3 * model.nVertices);
      expect(Number.isFinite(renderable!.vertices[0])).toBe(true);
      rendered++;
    }
    expect(rendered).toBe(20);

    controller.requestPause();
    controller.handleServer(await next("options_ack"));
    expect(controller.view().playing).toBe(false);
    expect(fail).toBeNull();
    socket.close();
  }, 30000);
});
