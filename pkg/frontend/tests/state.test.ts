import { describe, expect, it } from "vitest";

import {
  addPendingClick,
  applySessionSnapshot,
  applyStreamMessage,
  canSubmitClicks,
  clearPendingClicks,
  initialState,
  insertFrame,
  phaseToMode,
  scrubTo,
  type ViewState,
} from "../src/state.js";

const click = { x: 5, y: 6, polarity: "positive" as const };

function idleWithSession(): ViewState {
  return applySessionSnapshot(initialState(), {
    id: "s1",
    phase: "Idle",
    current_frame: 0,
    n_frames: 10,
    objects: [],
  });
}

describe("pending clicks", () => {
  it("accumulate while idle or paused, never while tracking", () => {
    let state = idleWithSession();
    state = addPendingClick(state, click);
    expect(state.pendingClicks).toHaveLength(1);
    state = { ...state, mode: "tracking" };
    expect(addPendingClick(state, click).pendingClicks).toHaveLength(1);
  });

  it("clear on submit", () => {
    const state = clearPendingClicks(addPendingClick(idleWithSession(), click));
    expect(state.pendingClicks).toHaveLength(0);
  });

  it("clear on frame change from the stream", () => {
    let state = addPendingClick(idleWithSession(), click);
    state = applyStreamMessage(state, {
      frame: 1,
      mask_png_b64: "xxxx",
      quality: [],
      refined: false,
      phase: "Tracking",
    });
    expect(state.pendingClicks).toHaveLength(0);
  });

  it("gate the submit control", () => {
    let state = idleWithSession();
    expect(canSubmitClicks(state)).toBe(false);
    state = addPendingClick(state, click);
    expect(canSubmitClicks(state)).toBe(true);
    expect(canSubmitClicks({ ...state, mode: "tracking" })).toBe(false);
    expect(canSubmitClicks({ ...state, mode: "paused" })).toBe(true);
  });
});

describe("mode mirrors the server phase", () => {
  it("maps phases", () => {
    expect(phaseToMode("Idle")).toBe("idle");
    expect(phaseToMode("Initialized")).toBe("idle");
    expect(phaseToMode("Tracking")).toBe("tracking");
    expect(phaseToMode("Paused")).toBe("paused");
    expect(phaseToMode("Finished")).toBe("finished");
  });

  it("reconciles on every stream message", () => {
    let state = idleWithSession();
    state = applyStreamMessage(state, { phase: "Tracking" });
    expect(state.mode).toBe("tracking");
    state = applyStreamMessage(state, { phase: "Paused" });
    expect(state.mode).toBe("paused");
    state = applyStreamMessage(state, { done: true, phase: "Finished" });
    expect(state.mode).toBe("finished");
  });
});

describe("timeline", () => {
  const entry = (frame: number) => ({ frame, maskB64: `m${frame}`, quality: [], refined: false });

  it("inserts ordered and deduplicates", () => {
    let timeline = insertFrame([], entry(2));
    timeline = insertFrame(timeline, entry(1));
    timeline = insertFrame(timeline, entry(3));
    timeline = insertFrame(timeline, { ...entry(2), refined: true });
    expect(timeline.map((e) => e.frame)).toEqual([1, 2, 3]);
    expect(timeline[1].refined).toBe(true);
  });

  it("stream messages advance the head and follow when unpinned", () => {
    let state = idleWithSession();
    for (const frame of [1, 2, 3]) {
      state = applyStreamMessage(state, {
        frame,
        mask_png_b64: "m",
        quality: [],
        refined: false,
        phase: "Tracking",
      });
    }
    expect(state.currentFrame).toBe(3);
    expect(state.viewedFrame).toBe(3);
    expect(state.lastStreamedFrame).toBe(3);
  });

  it("scrubbing pins the view and is clamped to history", () => {
    let state = idleWithSession();
    state = { ...state, currentFrame: 5 };
    state = scrubTo(state, 2);
    expect(state.viewedFrame).toBe(2);
    expect(state.followHead).toBe(false);
    state = applyStreamMessage(state, {
      frame: 6,
      mask_png_b64: "m",
      quality: [],
      refined: false,
      phase: "Tracking",
    });
    expect(state.viewedFrame).toBe(2); // pinned while scrubbed back
    expect(scrubTo(state, 99).viewedFrame).toBe(6);
    expect(scrubTo(state, 99).followHead).toBe(true);
  });
});

describe("session snapshots", () => {
  it("rebuild mode and frame from the server", () => {
    const state = applySessionSnapshot(initialState(), {
      id: "abc",
      phase: "Paused",
      current_frame: 7,
      n_frames: 30,
      objects: [{ id: 1, label: "object-1" }],
    });
    expect(state.sessionId).toBe("abc");
    expect(state.mode).toBe("paused");
    expect(state.currentFrame).toBe(7);
    expect(state.nObjects).toBe(1);
  });
});
