import { describe, expect, it, vi } from "vitest";

import { StreamClient } from "../src/ws.js";
import type { StreamMessage } from "../src/state.js";

class FakeSocket {
  onopen: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;
  constructor(public url: string) {}
  open() {
    this.onopen?.();
  }
  push(message: object) {
    this.onmessage?.({ data: JSON.stringify(message) });
  }
  drop() {
    this.onclose?.();
  }
  close() {
    this.onclose?.();
  }
}

function makeClient(messages: StreamMessage[], sockets: FakeSocket[]) {
  return new StreamClient({
    baseUrl: "ws://test",
    sessionId: "s1",
    onMessage: (m) => messages.push(m),
    makeSocket: (url) => {
      const socket = new FakeSocket(url);
      sockets.push(socket);
      return socket;
    },
    reconnectDelayMs: 1,
  });
}

describe("StreamClient", () => {
  it("delivers parsed messages and tracks the last frame", () => {
    const messages: StreamMessage[] = [];
    const sockets: FakeSocket[] = [];
    const client = makeClient(messages, sockets);
    client.connect(0);
    sockets[0].open();
    sockets[0].push({ frame: 1, mask_png_b64: "m", quality: [], refined: false });
    sockets[0].push({ frame: 2, mask_png_b64: "m", quality: [], refined: false });
    expect(messages).toHaveLength(2);
    expect(client.lastReceivedFrame).toBe(2);
  });

  it("reconnects after an unexpected drop, resuming past the last frame", async () => {
    vi.useFakeTimers();
    const messages: StreamMessage[] = [];
    const sockets: FakeSocket[] = [];
    const client = makeClient(messages, sockets);
    client.connect(0);
    sockets[0].open();
    sockets[0].push({ frame: 4, mask_png_b64: "m", quality: [], refined: false });
    sockets[0].drop();
    await vi.advanceTimersByTimeAsync(5);
    expect(sockets).toHaveLength(2);
    expect(sockets[1].url).toContain("?from=5");
    vi.useRealTimers();
  });

  it("does not reconnect after a done message", async () => {
    vi.useFakeTimers();
    const sockets: FakeSocket[] = [];
    const client = makeClient([], sockets);
    client.connect(0);
    sockets[0].open();
    sockets[0].push({ done: true, phase: "Finished" });
    sockets[0].drop();
    await vi.advanceTimersByTimeAsync(10);
    expect(sockets).toHaveLength(1);
    expect(client.lastReceivedFrame).toBe(-1);
    vi.useRealTimers();
  });

  it("close() is clean and final", async () => {
    vi.useFakeTimers();
    const sockets: FakeSocket[] = [];
    const client = makeClient([], sockets);
    client.connect(0);
    sockets[0].open();
    client.close();
    await vi.advanceTimersByTimeAsync(10);
    expect(sockets).toHaveLength(1);
    vi.useRealTimers();
  });
});
