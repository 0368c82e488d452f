/**
 * Editor state for a camera move and its serialization to the wire format.
 *
 * The invariant the tests enforce: serializeTrajectory is total. Whatever
 * junk ends up in the draft (NaN from an empty <input type=number>, huge
 * values, unsorted or duplicate keyframes, denormalized quaternions), the
 * serialized spec validates against trajectorySpecSchema and therefore
 * parses on the service.
 */
import {
  type Quat,
  type TrajectoryKind,
  type TrajectorySpecJson,
  type Vec3,
} from "../api/schemas";

export interface TrajectoryKeyframeRow {
  frame: number;
  q: Quat;
  t: Vec3;
}

export interface UiTrajectoryDraft {
  kind: TrajectoryKind;
  frames: number;
  magnitude: number;
  radius: number;
  turns: number;
  keyframes: TrajectoryKeyframeRow[];
  /** UI-only: current scrubber position; never serialized. */
  scrub: number;
}

export const MAX_FRAMES = 500; // service-side preview cap
export const IDENTITY_Q: Quat = [1, 0, 0, 0];
export const ZERO_T: Vec3 = [0, 0, 0];

export function defaultTrajectoryDraft(): UiTrajectoryDraft {
  return {
    kind: "right",
    frames: 49,
    magnitude: 0.5,
    radius: 0.5,
    turns: 1.0,
    keyframes: [
      { frame: 0, q: [...IDENTITY_Q], t: [...ZERO_T] },
      { frame: 48, q: [...IDENTITY_Q], t: [0.3, 0, 0] },
    ],
    scrub: 0,
  };
}

export function sanitizeNumber(v: number, fallback: number): number {
  return Number.isFinite(v) ? v : fallback;
}

export function clampInt(v: number, lo: number, hi: number, fallback: number): number {
  if (!Number.isFinite(v)) return fallback;
  return Math.min(hi, Math.max(lo, Math.round(v)));
}

export function normalizeQuat(q: readonly number[]): Quat {
  const [w = 0, x = 0, y = 0, z = 0] = q;
  if (![w, x, y, z].every(Number.isFinite)) return [...IDENTITY_Q];
  const n = Math.hypot(w, x, y, z);
  // n overflows to Infinity when components sit near Number.MAX_VALUE
  if (!Number.isFinite(n) || n < 1e-12) return [...IDENTITY_Q];
  return [w / n, x / n, y / n, z / n];
}

export function sanitizeVec3(t: readonly number[]): Vec3 {
  const [x = 0, y = 0, z = 0] = t;
  return [
    sanitizeNumber(x, 0),
    sanitizeNumber(y, 0),
    sanitizeNumber(z, 0),
  ];
}

/** Sort by frame, resolve duplicate frames in favor of the later edit. */
function cleanRows(rows: TrajectoryKeyframeRow[], maxFrame: number): TrajectoryKeyframeRow[] {
  const byFrame = new Map<number, TrajectoryKeyframeRow>();
  for (const row of rows) {
    const frame = clampInt(row.frame, 0, maxFrame, 0);
    byFrame.set(frame, { frame, q: normalizeQuat(row.q), t: sanitizeVec3(row.t) });
  }
  return [...byFrame.values()].sort((a, b) => a.frame - b.frame);
}

export function serializeTrajectory(draft: UiTrajectoryDraft): TrajectorySpecJson {
  const frames = clampInt(draft.frames, 2, MAX_FRAMES, 49);
  if (draft.kind !== "keyframed") {
    return {
      kind: draft.kind,
      frames,
      magnitude: sanitizeNumber(draft.magnitude, 0.5),
      radius: sanitizeNumber(draft.radius, 0.5),
      turns: sanitizeNumber(draft.turns, 1.0),
    };
  }

  const rows = cleanRows(draft.keyframes, MAX_FRAMES - 1);
  if (rows.length === 0 || rows[0]!.frame !== 0) {
    rows.unshift({ frame: 0, q: [...IDENTITY_Q], t: [...ZERO_T] });
  }
  if (rows.length < 2) {
    rows.push({ frame: 1, q: [...IDENTITY_Q], t: [...ZERO_T] });
  }
  // the clip ends exactly at the last keyframe
  const span = rows[rows.length - 1]!.frame + 1;
  return {
    kind: "keyframed",
    frames: Math.max(span, 2),
    keyframes: rows.map((r) => ({ frame: r.frame, q: r.q, t: r.t })),
  };
}

/** Deterministic bytes for undo comparison and cache keys. */
export function trajectoryBytes(draft: UiTrajectoryDraft): string {
  return JSON.stringify(serializeTrajectory(draft));
}
