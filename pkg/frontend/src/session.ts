/** Session controller: ack-gated option changes with debounce and rollback.
 *
 * The UI always reflects the last acked options. Each user action produces
 * exactly one protocol message; set_options requests are debounced to at most
 * one per 100 ms and at most one is in flight at a time. A server error
 * answering a pending request rolls the UI back to the acked state.
 */

import type {
  ClientMessage,
  ErrorMsg,
  OptionsAckMsg,
  ServerMessage,
  SessionOptions,
} from "./protocol.js";

export const DEBOUNCE_MS = 100;

export interface SessionViewState {
  /** last acked options; null until the first ack */
  options: SessionOptions | null;
  playing: boolean;
  frame: number;
  models: string[];
  /** a set_options / play / pause / seek awaits its ack: controls disabled */
  pending: boolean;
  lastError: ErrorMsg | null;
}

type Listener = (state: SessionViewState) => void;

export class SessionController {
  private state: SessionViewState = {
    options: null,
    playing: false,
    frame: 0,
    models: [],
    pending: false,
    lastError: null,
  };
  private desired: Partial<SessionOptions> = {};
  private debounceTimer: ReturnType<typeof setTimeout> | null = null;
  private lastSendAt = -Infinity;
  private listeners: Listener[] = [];

  constructor(
    private send: (message: ClientMessage) => void,
    private now: () => number = () => Date.now(),
  ) {}

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  view(): SessionViewState {
    return { ...this.state, options: this.state.options ? { ...this.state.options } : null };
  }

  private notify(): void {
    for (const listener of this.listeners) listener(this.view());
  }

  private transmit(message: ClientMessage): void {
    this.state.pending = true;
    this.lastSendAt = this.now();
    this.send(message);
    this.notify();
  }

  /** Merge a requested change; sends one debounced set_options when allowed. */
  requestOptions(partial: Partial<SessionOptions>): void {
    Object.assign(this.desired, partial);
    this.scheduleFlush();
  }

  requestPlay(): void { this.transmit({ type: "play" }); }
  requestPause(): void { this.transmit({ type: "pause" }); }
  requestSeek(frame: number): void { this.transmit({ type: "seek", frame }); }
  requestModels(): void { this.send({ type: "list_models" }); }

  private scheduleFlush(): void {
    if (this.debounceTimer !== null || this.state.pending) return;
    const wait = Math.max(0, DEBOUNCE_MS - (this.now() - this.lastSendAt));
    this.debounceTimer = setTimeout(() => {
      this.debounceTimer = null;
      this.flush();
    }, wait);
  }

  private flush(): void {
    if (this.state.pending || Object.keys(this.desired).length === 0) return;
    const message = { type: "set_options" as const, ...this.desired };
    this.desired = {};
    this.transmit(message);
  }

  /** Feed every parsed server message through here. */
  handleServer(message: ServerMessage): void {
    switch (message.type) {
      case "options_ack": {
        const ack = message as OptionsAckMsg;
        this.state.options = ack.options;
        this.state.playing = ack.playing;
        this.state.frame = ack.frame;
        this.state.pending = false;
        this.state.lastError = null;
        this.notify();
        this.scheduleFlush();  // follow-up changes accumulated while pending
        break;
      }
      case "models":
        this.state.models = message.ids;
        this.notify();
        break;
      case "error":
        // Rollback: drop the rejected request, keep showing acked state.
        this.state.pending = false;
        this.state.lastError = message;
        this.desired = {};
        this.notify();
        break;
      case "hello":
      case "model_info":
      case "frame":
      case "dropped_frame":
        break;  // handled by the rendering layer
    }
  }
}
