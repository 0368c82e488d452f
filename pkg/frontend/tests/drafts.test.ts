import fc from "fast-check";
import { describe, expect, test } from "vitest";

import { timelineFileSchema, trajectorySpecSchema, TRAJECTORY_KINDS } from "../src/api/schemas";
import {
  defaultTimelineDraft,
  serializeTimeline,
  timelineBytes,
  timelineClipFrames,
  type UiTimelineDraft,
} from "../src/state/timelineDraft";
import {
  defaultTrajectoryDraft,
  serializeTrajectory,
  trajectoryBytes,
  type UiTrajectoryDraft,
} from "../src/state/trajectoryDraft";
import { UndoStack } from "../src/state/undo";

// hostile numbers: everything a numeric <input> or a half-finished edit
// can produce, including NaN and the infinities
const anyNum = fc.double({ noNaN: false, noDefaultInfinity: false });
const quatArb = fc.tuple(anyNum, anyNum, anyNum, anyNum);
const vec3Arb = fc.tuple(anyNum, anyNum, anyNum);
const rowArb = fc.record({ frame: anyNum, q: quatArb, t: vec3Arb });

const trajectoryDraftArb: fc.Arbitrary<UiTrajectoryDraft> = fc.record({
  kind: fc.constantFrom(...TRAJECTORY_KINDS),
  frames: anyNum,
  magnitude: anyNum,
  radius: anyNum,
  turns: anyNum,
  keyframes: fc.array(rowArb, { maxLength: 8 }),
  scrub: anyNum,
});

const timelineDraftArb: fc.Arbitrary<UiTimelineDraft> = fc.record({
  pivotMode: fc.constantFrom("centroid" as const, "explicit" as const),
  pivot: vec3Arb,
  keyframes: fc.array(rowArb, { maxLength: 8 }),
  frames: anyNum,
  scrub: anyNum,
});

describe("serialization is total and schema-valid", () => {
  test("100 generated trajectory drafts", () => {
    fc.assert(
      fc.property(trajectoryDraftArb, (draft) => {
        const parsed = trajectorySpecSchema.safeParse(serializeTrajectory(draft));
        if (!parsed.success) throw new Error(parsed.error.message);
      }),
      { numRuns: 100 },
    );
  });

  test("100 generated timeline drafts", () => {
    fc.assert(
      fc.property(timelineDraftArb, (draft) => {
        const parsed = timelineFileSchema.safeParse(serializeTimeline(draft));
        if (!parsed.success) throw new Error(parsed.error.message);
        const clip = timelineClipFrames(draft);
        const last = serializeTimeline(draft).keyframes.at(-1)!.frame;
        if (!(Number.isInteger(clip) && clip >= 2 && clip > last)) {
          throw new Error(`clip ${clip} does not cover last keyframe ${last}`);
        }
      }),
      { numRuns: 100 },
    );
  });

  test("serialization is deterministic", () => {
    fc.assert(
      fc.property(trajectoryDraftArb, (draft) => {
        expect(trajectoryBytes(draft)).toBe(trajectoryBytes(structuredClone(draft)));
      }),
      { numRuns: 50 },
    );
  });
});

describe("wire format details", () => {
  test("spiral preset serializes to the exact service shape", () => {
    const draft = { ...defaultTrajectoryDraft(), kind: "spiral" as const };
    expect(serializeTrajectory(draft)).toEqual({
      kind: "spiral",
      frames: 49,
      magnitude: 0.5,
      radius: 0.5,
      turns: 1,
    });
  });

  test("magnitude 0 is a legal draft", () => {
    const draft = { ...defaultTrajectoryDraft(), magnitude: 0 };
    const spec = serializeTrajectory(draft);
    expect(spec.magnitude).toBe(0);
    expect(trajectorySpecSchema.safeParse(spec).success).toBe(true);
  });

  test("scrub position never leaks into the wire format", () => {
    const a = { ...defaultTrajectoryDraft(), scrub: 0 };
    const b = { ...defaultTrajectoryDraft(), scrub: 31 };
    expect(trajectoryBytes(a)).toBe(trajectoryBytes(b));
  });

  test("keyframed drafts grow an identity opener and clip-spanning end", () => {
    const draft: UiTrajectoryDraft = {
      ...defaultTrajectoryDraft(),
      kind: "keyframed",
      keyframes: [{ frame: 12, q: [2, 0, 0, 0], t: [0.5, 0, 0] }],
    };
    const spec = serializeTrajectory(draft);
    expect(spec.keyframes![0]).toEqual({ frame: 0, q: [1, 0, 0, 0], t: [0, 0, 0] });
    expect(spec.keyframes![1]!.q).toEqual([1, 0, 0, 0]); // normalized
    expect(spec.frames).toBe(13);
  });

  test("duplicate keyframe frames resolve to the later edit", () => {
    const draft: UiTimelineDraft = {
      ...defaultTimelineDraft(),
      keyframes: [
        { frame: 10, q: [1, 0, 0, 0], t: [0.1, 0, 0] },
        { frame: 10, q: [1, 0, 0, 0], t: [0.9, 0, 0] },
      ],
    };
    const tl = serializeTimeline(draft);
    expect(tl.keyframes).toHaveLength(1);
    expect(tl.keyframes[0]!.t[0]).toBe(0.9);
  });

  test("an explicit frame-0 timeline row is pinned to the identity", () => {
    const draft: UiTimelineDraft = {
      ...defaultTimelineDraft(),
      keyframes: [{ frame: 0, q: [0, 1, 0, 0], t: [5, 5, 5] }],
    };
    expect(serializeTimeline(draft).keyframes[0]).toEqual({
      frame: 0,
      q: [1, 0, 0, 0],
      t: [0, 0, 0],
    });
  });
});

describe("undo restores serialized bytes exactly", () => {
  test("trajectory: edit then undo round-trips byte-for-byte", () => {
    const stack = new UndoStack<UiTrajectoryDraft>();
    let draft = defaultTrajectoryDraft();
    const before = trajectoryBytes(draft);

    stack.commit(draft);
    draft.magnitude = 2.25;
    draft.keyframes[1]!.t[0] = 9;
    expect(trajectoryBytes(draft)).not.toBe(before);

    draft = stack.undo()!;
    expect(trajectoryBytes(draft)).toBe(before);
  });

  test("timeline: edit then undo round-trips byte-for-byte", () => {
    const stack = new UndoStack<UiTimelineDraft>();
    let draft = defaultTimelineDraft();
    const before = timelineBytes(draft);

    stack.commit(draft);
    draft.keyframes[0]!.q = [0.5, 0.5, 0.5, 0.5];
    draft.pivotMode = "explicit";
    expect(timelineBytes(draft)).not.toBe(before);

    draft = stack.undo()!;
    expect(timelineBytes(draft)).toBe(before);
  });

  test("any edit sequence unwinds to the original bytes", () => {
    fc.assert(
      fc.property(
        trajectoryDraftArb,
        fc.array(trajectoryDraftArb, { minLength: 1, maxLength: 5 }),
        (start, edits) => {
          const stack = new UndoStack<UiTrajectoryDraft>();
          let draft = structuredClone(start);
          const want = [trajectoryBytes(draft)];
          for (const next of edits) {
            stack.commit(draft);
            draft = structuredClone(next);
            want.push(trajectoryBytes(draft));
          }
          for (let i = edits.length - 1; i >= 0; i--) {
            draft = stack.undo()!;
            expect(trajectoryBytes(draft)).toBe(want[i]);
          }
          expect(stack.undo()).toBeUndefined();
        },
      ),
      { numRuns: 40 },
    );
  });
});
