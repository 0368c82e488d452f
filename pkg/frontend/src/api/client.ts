/**
 * Thin typed fetch client. Every response is zod-parsed before it reaches
 * a view, and every non-2xx turns into a ServiceError carrying the status
 * plus the backend's {error, detail} body so the UI can show it verbatim.
 */
import {
  errorBodySchema,
  previewInfoSchema,
  pointsResponseSchema,
  sessionInfoSchema,
  type PreviewInfo,
  type PointsResponse,
  type SessionInfo,
  type TimelineFileJson,
  type TrajectorySpecJson,
} from "./schemas";

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly errorName: string,
    readonly detail: string,
  ) {
    super(`${status} ${errorName}: ${detail}`);
    this.name = "ServiceError";
  }
}

async function raiseFor(res: Response): Promise<never> {
  let name = "HttpError";
  let detail = res.statusText || "request failed";
  try {
    const parsed = errorBodySchema.safeParse(await res.json());
    if (parsed.success) {
      name = parsed.data.error;
      detail = parsed.data.detail;
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ServiceError(res.status, name, detail);
}

export interface SessionUpload {
  image: Blob;
  depth: Blob;
  grid?: number;
  fx?: number;
  fy?: number;
  cx?: number;
  cy?: number;
}

export class StudioClient {
  constructor(readonly base: string = "") {}

  private url(path: string): string {
    return `${this.base}${path}`;
  }

  async health(): Promise<boolean> {
    try {
      const res = await fetch(this.url("/api/healthz"));
      return res.ok && (await res.text()) === "ok";
    } catch {
      return false;
    }
  }

  async createSession(upload: SessionUpload): Promise<SessionInfo> {
    const form = new FormData();
    form.append("image", upload.image, "image.png");
    form.append("depth", upload.depth, "depth.pfm");
    if (upload.grid !== undefined) form.append("grid", String(upload.grid));
    for (const key of ["fx", "fy", "cx", "cy"] as const) {
      const v = upload[key];
      if (v !== undefined) form.append(key, String(v));
    }
    const res = await fetch(this.url("/api/sessions"), { method: "POST", body: form });
    if (!res.ok) await raiseFor(res);
    return sessionInfoSchema.parse(await res.json());
  }

  async points(sessionId: string, grid?: number): Promise<PointsResponse> {
    const qs = grid === undefined ? "" : `?grid=${grid}`;
    const res = await fetch(this.url(`/api/sessions/${sessionId}/points${qs}`));
    if (!res.ok) await raiseFor(res);
    return pointsResponseSchema.parse(await res.json());
  }

  async previewCamera(
    sessionId: string,
    spec: TrajectorySpecJson,
    signal?: AbortSignal,
  ): Promise<PreviewInfo> {
    const res = await fetch(this.url(`/api/sessions/${sessionId}/previews/camera`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(spec),
      signal,
    });
    if (!res.ok) await raiseFor(res);
    return previewInfoSchema.parse(await res.json());
  }

  async previewObject(
    sessionId: string,
    mask: Blob,
    timeline: TimelineFileJson,
    frames: number,
    signal?: AbortSignal,
  ): Promise<PreviewInfo> {
    const form = new FormData();
    form.append("mask", mask, "mask.pgm");
    form.append("timeline", JSON.stringify(timeline));
    form.append("frames", String(frames));
    const res = await fetch(this.url(`/api/sessions/${sessionId}/previews/object`), {
      method: "POST",
      body: form,
      signal,
    });
    if (!res.ok) await raiseFor(res);
    return previewInfoSchema.parse(await res.json());
  }

  frameUrl(previewId: string, k: number): string {
    return this.url(`/api/previews/${previewId}/frames/${k}`);
  }

  async fetchFrame(previewId: string, k: number, signal?: AbortSignal): Promise<Blob> {
    const res = await fetch(this.frameUrl(previewId, k), { signal });
    if (!res.ok) await raiseFor(res);
    return res.blob();
  }

  async exportArchive(
    sessionId: string,
    body: { preview_id: string } | { trajectory: TrajectorySpecJson },
  ): Promise<Blob> {
    const res = await fetch(this.url(`/api/sessions/${sessionId}/export`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) await raiseFor(res);
    return res.blob();
  }
}
