/**
 * zod mirrors of the service wire formats. Anything these schemas accept
 * the service accepts; the generators in tests lean on that to prove the
 * editors can never produce a request the backend rejects as malformed.
 */
import { z } from "zod";

const num = z.number().refine(Number.isFinite, { message: "must be finite" });

export const vec3Schema = z.tuple([num, num, num]);
export type Vec3 = z.infer<typeof vec3Schema>;

const UNIT_TOL = 1e-6;

export const quatSchema = z
  .tuple([num, num, num, num])
  .refine((q) => Math.abs(Math.hypot(q[0], q[1], q[2], q[3]) - 1) <= UNIT_TOL, {
    message: "quaternion must be unit length",
  });
export type Quat = z.infer<typeof quatSchema>;

export const poseKeyframeSchema = z.object({
  frame: z.number().int().min(0),
  q: quatSchema,
  t: vec3Schema,
});
export type PoseKeyframe = z.infer<typeof poseKeyframeSchema>;

export const PRESET_KINDS = ["left", "right", "up", "down", "spiral"] as const;
export const TRAJECTORY_KINDS = [...PRESET_KINDS, "keyframed"] as const;
export type TrajectoryKind = (typeof TRAJECTORY_KINDS)[number];

function checkIncreasing(
  frames: number[],
  ctx: { addIssue: (issue: { code: "custom"; message: string }) => void },
): void {
  for (let i = 1; i < frames.length; i++) {
    if ((frames[i] as number) <= (frames[i - 1] as number)) {
      ctx.addIssue({ code: "custom", message: "keyframe frames must be strictly increasing" });
      return;
    }
  }
}

export const trajectorySpecSchema = z
  .object({
    kind: z.enum(TRAJECTORY_KINDS),
    frames: z.number().int().min(2),
    magnitude: num.optional(),
    radius: num.optional(),
    turns: num.optional(),
    look_at: vec3Schema.nullish(),
    keyframes: z.array(poseKeyframeSchema).optional(),
  })
  .superRefine((spec, ctx) => {
    const kfs = spec.keyframes ?? [];
    if (spec.kind === "keyframed") {
      if (kfs.length < 2) {
        ctx.addIssue({ code: "custom", message: "keyframed trajectory needs >= 2 keyframes" });
        return;
      }
      checkIncreasing(kfs.map((k) => k.frame), ctx);
      if (kfs[0]!.frame !== 0 || kfs[kfs.length - 1]!.frame !== spec.frames - 1) {
        ctx.addIssue({
          code: "custom",
          message: `keyframes must span frame 0 to ${spec.frames - 1}`,
        });
      }
    } else if (kfs.length > 0) {
      ctx.addIssue({ code: "custom", message: "presets do not take keyframes" });
    }
  });
export type TrajectorySpecJson = z.infer<typeof trajectorySpecSchema>;

const IDENT_TOL = 1e-9;

export const timelineFileSchema = z
  .object({
    pivot: z.union([z.literal("centroid"), vec3Schema]),
    keyframes: z.array(poseKeyframeSchema).min(1),
  })
  .superRefine((tl, ctx) => {
    // zod runs this refinement even when min(1) already failed
    const first = tl.keyframes[0];
    if (first === undefined) return;
    checkIncreasing(tl.keyframes.map((k) => k.frame), ctx);
    if (first.frame === 0) {
      const dq = Math.hypot(first.q[0] - 1, first.q[1], first.q[2], first.q[3]);
      const dt = Math.hypot(first.t[0], first.t[1], first.t[2]);
      if (dq > IDENT_TOL || dt > IDENT_TOL) {
        ctx.addIssue({ code: "custom", message: "frame-0 keyframe must be the identity" });
      }
    }
  });
export type TimelineFileJson = z.infer<typeof timelineFileSchema>;

export const bboxSchema = z.object({
  x_min: num,
  x_max: num,
  y_min: num,
  y_max: num,
  invz_min: num,
  invz_max: num,
});
export type Bbox = z.infer<typeof bboxSchema>;

export const sessionInfoSchema = z.object({
  id: z.string().length(32),
  n_points: z.number().int().positive(),
  bbox: bboxSchema,
});
export type SessionInfo = z.infer<typeof sessionInfoSchema>;

const channel = z.number().int().min(0).max(255);

export const colorPointSchema = z.object({
  x: num,
  y: num,
  z: num,
  r: channel,
  g: channel,
  b: channel,
});
export type ColorPoint = z.infer<typeof colorPointSchema>;

export const pointsResponseSchema = z.object({
  points: z.array(colorPointSchema),
  n_points: z.number().int().positive(),
  bbox: bboxSchema,
});
export type PointsResponse = z.infer<typeof pointsResponseSchema>;

export const previewInfoSchema = z.object({
  preview_id: z.string().length(32),
  frames: z.number().int().min(2),
  width: z.number().int().positive(),
  height: z.number().int().positive(),
});
export type PreviewInfo = z.infer<typeof previewInfoSchema>;

export const errorBodySchema = z.object({
  error: z.string(),
  detail: z.string(),
});
export type ErrorBody = z.infer<typeof errorBodySchema>;
