/**
 * Browser app: click to define objects, watch propagation, pause and fix.
 *
 * One positive click is the primary gesture (shift-click or the toggle
 * for negatives); clicks are batched until submitted. Everything the UI
 * knows comes back from the server, so a reload mid-run reconstructs the
 * exact same view.
 */

import { ApiError, SessionApi } from "./api.js";
import { decodeMaskB64, decodeIndexedPng } from "./maskpng.js";
import { overlayPixels } from "./overlay.js";
import {
  addPendingClick,
  applySessionSnapshot,
  applyStreamMessage,
  canSubmitClicks,
  clearPendingClicks,
  initialState,
  scrubTo,
  setOpacity,
  type ViewState,
} from "./state.js";
import { StreamClient } from "./ws.js";

const api = new SessionApi("");
let state: ViewState = initialState();
let stream: StreamClient | null = null;
let negativeToggle = false;

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const frameImage = $("frame") as unknown as HTMLImageElement;
const overlayCanvas = $("overlay") as unknown as HTMLCanvasElement;
const clickCanvas = $("clicks") as unknown as HTMLCanvasElement;
const statusLine = $("status");
const qualityPanel = $("quality");
const scrubber = $("scrubber") as unknown as HTMLInputElement;
const opacitySlider = $("opacity") as unknown as HTMLInputElement;

function setState(next: ViewState): void {
  const previous = state;
  state = next;
  void render(previous);
}

function wsBase(): string {
  const { protocol, host } = window.location;
  return `${protocol === "https:" ? "wss:" : "ws:"}//${host}`;
}

async function renderOverlayForViewedFrame(): Promise<void> {
  const entry = state.timeline.find((e) => e.frame === state.viewedFrame);
  const ctx = overlayCanvas.getContext("2d");
  if (!ctx) return;
  let decoded = null;
  if (entry) {
    decoded = await decodeMaskB64(entry.maskB64);
  } else if (state.sessionId !== null) {
    const bytes = await api.frameMask(state.sessionId, state.viewedFrame);
    if (bytes) decoded = await decodeIndexedPng(bytes);
  }
  if (!decoded) {
    ctx.clearRect(0, 0, overlayCanvas.width, overlayCanvas.height);
    return;
  }
  overlayCanvas.width = decoded.width;
  overlayCanvas.height = decoded.height;
  const pixels = overlayPixels(decoded, state.overlayOpacity);
  ctx.putImageData(new ImageData(pixels, decoded.width, decoded.height), 0, 0);
}

function renderPendingClicks(): void {
  const ctx = clickCanvas.getContext("2d");
  if (!ctx) return;
  clickCanvas.width = overlayCanvas.width || frameImage.naturalWidth;
  clickCanvas.height = overlayCanvas.height || frameImage.naturalHeight;
  ctx.clearRect(0, 0, clickCanvas.width, clickCanvas.height);
  for (const click of state.pendingClicks) {
    ctx.beginPath();
    ctx.arc(click.x, click.y, 4, 0, Math.PI * 2);
    ctx.fillStyle = click.polarity === "positive" ? "#2ecc40" : "#ff4136";
    ctx.fill();
    ctx.strokeStyle = "white";
    ctx.stroke();
  }
}

function renderQuality(): void {
  const entry = state.timeline.find((e) => e.frame === state.viewedFrame);
  if (!entry) {
    qualityPanel.textContent = "";
    return;
  }
  qualityPanel.innerHTML = entry.quality
    .map(
      (q) =>
        `<span class="badge ${q.pass ? "ok" : "bad"}">obj ${q.object_id}: ` +
        `${q.score.toFixed(3)}</span>`,
    )
    .join(" ") + (entry.refined ? ' <span class="badge refined">refined</span>' : "");
}

async function render(previous: ViewState): Promise<void> {
  statusLine.textContent =
    `${state.mode}` +
    (state.sessionId ? ` | frame ${state.viewedFrame}/${state.currentFrame}` : "") +
    (state.error ? ` | error: ${state.error}` : "");
  $("submit").toggleAttribute("disabled", !canSubmitClicks(state));
  $("negative-toggle").textContent = negativeToggle ? "negative clicks" : "positive clicks";
  scrubber.max = String(Math.max(0, state.currentFrame));
  scrubber.value = String(state.viewedFrame);
  if (state.sessionId && previous.viewedFrame !== state.viewedFrame) {
    frameImage.src = api.frameImageUrl(state.sessionId, state.viewedFrame);
  }
  await renderOverlayForViewedFrame();
  renderPendingClicks();
  renderQuality();
}

function connectStream(): void {
  if (!state.sessionId) return;
  stream?.close();
  stream = new StreamClient({
    baseUrl: wsBase(),
    sessionId: state.sessionId,
    onMessage: (message) => setState(applyStreamMessage(state, message)),
    onStatus: (status) => {
      if (status === "reconnecting") statusLine.textContent = "reconnecting…";
    },
  });
  stream.connect(0);
}

async function createSession(): Promise<void> {
  const videoDir = ($("video-dir") as unknown as HTMLInputElement).value.trim();
  const sequence = ($("sequence") as unknown as HTMLInputElement).value.trim() || undefined;
  try {
    const snapshot = await api.createSession(videoDir, sequence);
    setState(applySessionSnapshot(initialState(), snapshot));
    frameImage.src = api.frameImageUrl(snapshot.id, 0);
    connectStream();
  } catch (error) {
    statusLine.textContent = error instanceof Error ? error.message : String(error);
  }
}

async function submitClicks(): Promise<void> {
  if (!state.sessionId || !canSubmitClicks(state)) return;
  const points = state.pendingClicks;
  const objectId = state.mode === "paused" ? state.activeObject : undefined;
  try {
    const response = await api.submitClicks(state.sessionId, state.currentFrame, points, objectId);
    let next = clearPendingClicks(state);
    next = applyStreamMessage(next, {
      frame: response.frame,
      mask_png_b64: response.labelmap_png_b64,
      quality: [],
      refined: false,
      phase: response.phase,
    });
    next = { ...next, activeObject: response.object_id, nObjects: Math.max(next.nObjects, response.object_id) };
    setState(next);
  } catch (error) {
    if (error instanceof ApiError && error.phase) {
      // Phase conflict: resync from the server instead of trusting local state.
      const snapshot = await api.getSession(state.sessionId);
      setState(applySessionSnapshot(clearPendingClicks(state), snapshot));
      statusLine.textContent = `rejected (${error.message}); state resynced`;
    } else {
      statusLine.textContent = error instanceof Error ? error.message : String(error);
    }
  }
}

function canvasClick(event: MouseEvent): void {
  if (state.mode === "tracking" || state.mode === "finished") return;
  if (!state.followHead) return; // history is read-only
  const rect = clickCanvas.getBoundingClientRect();
  const scaleX = clickCanvas.width / rect.width;
  const scaleY = clickCanvas.height / rect.height;
  const x = Math.floor((event.clientX - rect.left) * scaleX);
  const y = Math.floor((event.clientY - rect.top) * scaleY);
  const polarity = event.shiftKey || negativeToggle ? "negative" : "positive";
  setState(addPendingClick(state, { x, y, polarity }));
}

async function phaseAction(action: "start" | "pause" | "resume" | "finish"): Promise<void> {
  if (!state.sessionId) return;
  try {
    await api[action](state.sessionId);
    const snapshot = await api.getSession(state.sessionId);
    setState(applySessionSnapshot(state, snapshot));
  } catch (error) {
    if (error instanceof ApiError && state.sessionId) {
      const snapshot = await api.getSession(state.sessionId);
      setState(applySessionSnapshot(state, snapshot));
      statusLine.textContent = `rejected (${error.message}); state resynced`;
    }
  }
}

function wire(): void {
  $("create").addEventListener("click", () => void createSession());
  $("submit").addEventListener("click", () => void submitClicks());
  $("start").addEventListener("click", () => void phaseAction("start"));
  $("pause").addEventListener("click", () => void phaseAction("pause"));
  $("resume").addEventListener("click", () => void phaseAction("resume"));
  $("negative-toggle").addEventListener("click", () => {
    negativeToggle = !negativeToggle;
    void render(state);
  });
  clickCanvas.addEventListener("click", canvasClick);
  scrubber.addEventListener("input", () => {
    setState(scrubTo(state, Number(scrubber.value)));
    if (state.sessionId) frameImage.src = api.frameImageUrl(state.sessionId, state.viewedFrame);
  });
  opacitySlider.addEventListener("input", () => {
    setState(setOpacity(state, Number(opacitySlider.value) / 100));
  });
}

wire();
