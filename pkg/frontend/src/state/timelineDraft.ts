/**
 * Editor state for an object-manipulation timeline. Same totality contract
 * as the trajectory draft: any reachable editor state serializes to a
 * timeline the service parses, with the frame-0 row pinned to the identity
 * because the first frame must match the source image.
 */
import { type Quat, type TimelineFileJson, type Vec3 } from "../api/schemas";
import {
  clampInt,
  IDENTITY_Q,
  MAX_FRAMES,
  normalizeQuat,
  sanitizeVec3,
  ZERO_T,
} from "./trajectoryDraft";

export type PivotMode = "centroid" | "explicit";

export interface TimelineKeyframeRow {
  frame: number;
  q: Quat;
  t: Vec3;
}

export interface UiTimelineDraft {
  pivotMode: PivotMode;
  pivot: Vec3;
  keyframes: TimelineKeyframeRow[];
  frames: number;
  /** UI-only scrubber position. */
  scrub: number;
}

export function defaultTimelineDraft(): UiTimelineDraft {
  return {
    pivotMode: "centroid",
    pivot: [0, 0, 0],
    keyframes: [{ frame: 24, q: [...IDENTITY_Q], t: [0.2, 0, 0] }],
    frames: 49,
    scrub: 0,
  };
}

export function serializeTimeline(draft: UiTimelineDraft): TimelineFileJson {
  const byFrame = new Map<number, TimelineKeyframeRow>();
  for (const row of draft.keyframes) {
    const frame = clampInt(row.frame, 0, MAX_FRAMES - 1, 0);
    byFrame.set(frame, { frame, q: normalizeQuat(row.q), t: sanitizeVec3(row.t) });
  }
  const rows = [...byFrame.values()].sort((a, b) => a.frame - b.frame);
  if (rows.length > 0 && rows[0]!.frame === 0) {
    // explicit frame-0 keyframes are only legal as the exact identity
    rows[0] = { frame: 0, q: [...IDENTITY_Q], t: [...ZERO_T] };
  }
  if (rows.length === 0) {
    rows.push({ frame: 1, q: [...IDENTITY_Q], t: [...ZERO_T] });
  }
  return {
    pivot: draft.pivotMode === "centroid" ? "centroid" : sanitizeVec3(draft.pivot),
    keyframes: rows.map((r) => ({ frame: r.frame, q: r.q, t: r.t })),
  };
}

/** Clip length to request: the user's choice, stretched to cover the last keyframe. */
export function timelineClipFrames(draft: UiTimelineDraft): number {
  const last = serializeTimeline(draft).keyframes.at(-1)!.frame;
  const wanted = clampInt(draft.frames, 2, MAX_FRAMES, 49);
  return Math.min(MAX_FRAMES, Math.max(wanted, last + 1));
}

export function timelineBytes(draft: UiTimelineDraft): string {
  return JSON.stringify(serializeTimeline(draft));
}
