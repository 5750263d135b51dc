/**
 * View state and its reducers.
 *
 * The server is the only source of truth: every reducer that touches
 * `mode` derives it from a server-reported phase, and a reconnect can
 * rebuild the whole timeline from REST + the stream history. Pending
 * clicks are cleared whenever they are submitted or the frame changes.
 */

export type Polarity = "positive" | "negative";
export type Mode = "idle" | "tracking" | "paused" | "finished";

export interface PendingClick {
  x: number;
  y: number;
  polarity: Polarity;
}

export interface QualityEntry {
  object_id: number;
  confidence: number;
  area_ratio: number;
  score: number;
  pass: boolean;
}

export interface FrameEntry {
  frame: number;
  maskB64: string;
  quality: QualityEntry[];
  refined: boolean;
}

export interface ViewState {
  sessionId: string | null;
  mode: Mode;
  /** Server-side tracking head. */
  currentFrame: number;
  /** What the user is looking at (scrubber); follows the head unless pinned. */
  viewedFrame: number;
  followHead: boolean;
  activeObject: number;
  overlayOpacity: number;
  pendingClicks: PendingClick[];
  timeline: FrameEntry[];
  lastStreamedFrame: number;
  nObjects: number;
  error: string | null;
}

export function initialState(): ViewState {
  return {
    sessionId: null,
    mode: "idle",
    currentFrame: 0,
    viewedFrame: 0,
    followHead: true,
    activeObject: 1,
    overlayOpacity: 0.5,
    pendingClicks: [],
    timeline: [],
    lastStreamedFrame: -1,
    nObjects: 0,
    error: null,
  };
}

export function phaseToMode(phase: string): Mode {
  switch (phase) {
    case "Tracking":
      return "tracking";
    case "Paused":
      return "paused";
    case "Finished":
      return "finished";
    default:
      return "idle";
  }
}

export function addPendingClick(state: ViewState, click: PendingClick): ViewState {
  if (state.mode === "tracking" || state.mode === "finished") return state;
  return { ...state, pendingClicks: [...state.pendingClicks, click] };
}

export function clearPendingClicks(state: ViewState): ViewState {
  return state.pendingClicks.length ? { ...state, pendingClicks: [] } : state;
}

/** Ordered, deduplicated insert; replaces an existing entry for the frame. */
export function insertFrame(timeline: FrameEntry[], entry: FrameEntry): FrameEntry[] {
  const next = timeline.filter((e) => e.frame !== entry.frame);
  next.push(entry);
  next.sort((a, b) => a.frame - b.frame);
  return next;
}

export interface StreamMessage {
  frame?: number;
  mask_png_b64?: string;
  quality?: QualityEntry[];
  refined?: boolean;
  phase?: string;
  done?: boolean;
  error?: string;
}

export function applyStreamMessage(state: ViewState, message: StreamMessage): ViewState {
  let next = { ...state };
  if (message.phase) {
    const mode = phaseToMode(message.phase);
    if (mode !== next.mode) {
      // Mode always mirrors the server phase; a frame change drops pending clicks.
      next = { ...next, mode, pendingClicks: mode === "paused" ? next.pendingClicks : [] };
    }
  }
  if (message.error) {
    next = { ...next, error: message.error };
  }
  if (typeof message.frame === "number" && message.mask_png_b64) {
    const entry: FrameEntry = {
      frame: message.frame,
      maskB64: message.mask_png_b64,
      quality: message.quality ?? [],
      refined: message.refined ?? false,
    };
    const frameChanged = message.frame !== next.currentFrame;
    next = {
      ...next,
      timeline: insertFrame(next.timeline, entry),
      currentFrame: Math.max(next.currentFrame, message.frame),
      lastStreamedFrame: Math.max(next.lastStreamedFrame, message.frame),
      viewedFrame: next.followHead ? Math.max(next.currentFrame, message.frame) : next.viewedFrame,
      pendingClicks: frameChanged ? [] : next.pendingClicks,
    };
  }
  if (message.done) {
    next = { ...next, mode: "finished" };
  }
  return next;
}

export interface SessionSnapshot {
  id: string;
  phase: string;
  current_frame: number;
  n_frames: number;
  objects: { id: number; label: string }[];
}

export function applySessionSnapshot(state: ViewState, snapshot: SessionSnapshot): ViewState {
  const mode = phaseToMode(snapshot.phase);
  const frameChanged = snapshot.current_frame !== state.currentFrame;
  return {
    ...state,
    sessionId: snapshot.id,
    mode,
    currentFrame: snapshot.current_frame,
    viewedFrame: state.followHead ? snapshot.current_frame : state.viewedFrame,
    nObjects: snapshot.objects.length,
    pendingClicks: frameChanged ? [] : state.pendingClicks,
  };
}

/** Scrubbing views history only; it never mutates engine state. */
export function scrubTo(state: ViewState, frame: number): ViewState {
  const clamped = Math.max(0, Math.min(frame, state.currentFrame));
  return {
    ...state,
    viewedFrame: clamped,
    followHead: clamped === state.currentFrame,
  };
}

export function setOpacity(state: ViewState, opacity: number): ViewState {
  return { ...state, overlayOpacity: Math.max(0, Math.min(1, opacity)) };
}

export function canSubmitClicks(state: ViewState): boolean {
  return state.pendingClicks.length > 0 && (state.mode === "idle" || state.mode === "paused");
}
