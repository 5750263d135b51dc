/**
 * REST client for the session service. Every engine mutation the UI can
 * perform goes through these documented endpoints and nothing else.
 */

import type { PendingClick, QualityEntry, SessionSnapshot } from "./state.js";

export class ApiError extends Error {
  constructor(
    message: string,
    public status: number,
    public phase: string | null = null,
  ) {
    super(message);
  }
}

export interface ClickResponse {
  object_id: number;
  phase: string;
  frame: number;
  mask_png_b64: string;
  labelmap_png_b64: string;
}

export interface EventRecord {
  index: number;
  kind: string;
  frame: number;
  payload: Record<string, unknown>;
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  if (!response.ok) {
    let phase: string | null = null;
    let detail = `${response.status}`;
    try {
      const body = await response.json();
      const d = body?.detail;
      if (typeof d === "string") detail = d;
      else if (d) {
        detail = d.error ?? JSON.stringify(d);
        phase = d.phase ?? null;
      }
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(detail, response.status, phase);
  }
  return (await response.json()) as T;
}

export class SessionApi {
  constructor(public baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  createSession(videoDir: string, sequence?: string): Promise<SessionSnapshot> {
    return request(this.url("/v1/sessions"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ video_dir: videoDir, sequence }),
    });
  }

  getSession(id: string): Promise<SessionSnapshot> {
    return request(this.url(`/v1/sessions/${id}`));
  }

  submitClicks(
    id: string,
    frame: number,
    points: PendingClick[],
    objectId?: number,
  ): Promise<ClickResponse> {
    return request(this.url(`/v1/sessions/${id}/clicks`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ frame, points, object_id: objectId }),
    });
  }

  start(id: string): Promise<{ phase: string }> {
    return request(this.url(`/v1/sessions/${id}/start`), { method: "POST" });
  }

  pause(id: string): Promise<{ phase: string; frame: number }> {
    return request(this.url(`/v1/sessions/${id}/pause`), { method: "POST" });
  }

  resume(id: string): Promise<{ phase: string }> {
    return request(this.url(`/v1/sessions/${id}/resume`), { method: "POST" });
  }

  finish(id: string): Promise<{ phase: string }> {
    return request(this.url(`/v1/sessions/${id}/finish`), { method: "POST" });
  }

  getEvents(id: string): Promise<{ header: Record<string, unknown>; events: EventRecord[] }> {
    return request(this.url(`/v1/sessions/${id}/events`));
  }

  frameImageUrl(id: string, frame: number): string {
    return this.url(`/v1/sessions/${id}/frames/${frame}/image.jpg`);
  }

  async frameMask(id: string, frame: number): Promise<ArrayBuffer | null> {
    const response = await fetch(this.url(`/v1/sessions/${id}/frames/${frame}/mask.png`));
    if (response.status === 404) return null;
    if (!response.ok) throw new ApiError(`mask fetch failed`, response.status);
    return response.arrayBuffer();
  }
}

export type { QualityEntry };
