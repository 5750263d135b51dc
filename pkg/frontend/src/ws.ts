/**
 * Tracking stream client with automatic reconnect.
 *
 * On an unexpected drop it redials with ?from=<last frame + 1>, so the
 * subscriber never misses or repeats a frame. The WebSocket constructor
 * is injectable (browser global in the app, `ws` package in node tests).
 */

import type { StreamMessage } from "./state.js";

type WebSocketLike = {
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  close(): void;
};

export type WebSocketFactory = (url: string) => WebSocketLike;

export interface StreamOptions {
  /** ws(s):// base, e.g. ws://localhost:8765 */
  baseUrl: string;
  sessionId: string;
  onMessage: (message: StreamMessage) => void;
  onStatus?: (status: "connected" | "reconnecting" | "closed") => void;
  makeSocket?: WebSocketFactory;
  reconnectDelayMs?: number;
  maxReconnects?: number;
}

export class StreamClient {
  private socket: WebSocketLike | null = null;
  private lastFrame = -1;
  private closed = false;
  private reconnects = 0;

  constructor(private options: StreamOptions) {}

  get lastReceivedFrame(): number {
    return this.lastFrame;
  }

  connect(fromFrame?: number): void {
    const make: WebSocketFactory =
      this.options.makeSocket ?? ((url) => new WebSocket(url) as unknown as WebSocketLike);
    const from = fromFrame ?? this.lastFrame + 1;
    const url =
      `${this.options.baseUrl}/v1/sessions/${this.options.sessionId}/stream` +
      (from > 0 ? `?from=${from}` : "");
    const socket = make(url);
    this.socket = socket;
    socket.onopen = () => {
      this.reconnects = 0;
      this.options.onStatus?.("connected");
    };
    socket.onmessage = (event) => {
      let message: StreamMessage;
      try {
        message = JSON.parse(String(event.data)) as StreamMessage;
      } catch {
        return;
      }
      if (typeof message.frame === "number") {
        this.lastFrame = Math.max(this.lastFrame, message.frame);
      }
      if (message.done) {
        this.closed = true;
      }
      this.options.onMessage(message);
    };
    socket.onerror = () => {
      /* close handler decides on reconnect */
    };
    socket.onclose = () => {
      if (this.closed) {
        this.options.onStatus?.("closed");
        return;
      }
      const max = this.options.maxReconnects ?? 20;
      if (this.reconnects >= max) {
        this.options.onStatus?.("closed");
        return;
      }
      this.reconnects += 1;
      this.options.onStatus?.("reconnecting");
      const delay = this.options.reconnectDelayMs ?? 500;
      setTimeout(() => {
        if (!this.closed) this.connect();
      }, delay);
    };
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }
}
