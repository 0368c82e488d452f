import { describe, expect, test } from "vitest";

import { decimate, VIEWER_POINT_CAP } from "../src/lib/decimate";
import { pixelDiffCount } from "../src/lib/pixelDiff";
import { LatestWins } from "../src/state/latestWins";

describe("latest-wins preview requests", () => {
  test("a newer request aborts the one in flight", async () => {
    const race = new LatestWins<string>();
    let sawAbort = false;
    const first = race.request(
      (signal) =>
        new Promise<string>((_, reject) => {
          signal.addEventListener("abort", () => {
            sawAbort = true;
            reject(new DOMException("aborted", "AbortError"));
          });
        }),
    );
    const second = race.request(async () => "second");

    expect(await second).toBe("second");
    expect(await first).toBeNull();
    expect(sawAbort).toBe(true);
  });

  test("a stale response that ignores its abort signal is dropped", async () => {
    const race = new LatestWins<string>();
    let finishFirst!: (v: string) => void;
    const first = race.request(() => new Promise<string>((res) => (finishFirst = res)));
    const second = race.request(async () => "second");

    expect(await second).toBe("second");
    finishFirst("first"); // resolves late; must not win
    expect(await first).toBeNull();
  });

  test("failures of the current request propagate", async () => {
    const race = new LatestWins<string>();
    await expect(
      race.request(async () => {
        throw new Error("boom");
      }),
    ).rejects.toThrow("boom");
  });

  test("cancel() silences the in-flight request", async () => {
    const race = new LatestWins<string>();
    const pending = race.request(
      (signal) =>
        new Promise<string>((_, reject) => {
          signal.addEventListener("abort", () => reject(new Error("cancelled")));
        }),
    );
    race.cancel();
    expect(await pending).toBeNull();
  });
});

describe("viewer point decimation", () => {
  test("keeps small clouds intact", () => {
    const pts = [1, 2, 3];
    expect(decimate(pts, 10)).toEqual([1, 2, 3]);
  });

  test("caps at 20k by default and is deterministic", () => {
    const pts = Array.from({ length: 123_457 }, (_, i) => i);
    const a = decimate(pts);
    expect(a.length).toBe(VIEWER_POINT_CAP);
    expect(a).toEqual(decimate(pts));
    expect(a[0]).toBe(0);
    for (let i = 1; i < a.length; i++) expect(a[i]!).toBeGreaterThan(a[i - 1]!);
  });
});

describe("pixel diff badge", () => {
  test("identical buffers diff 0", () => {
    const a = new Uint8ClampedArray([1, 2, 3, 255, 9, 9, 9, 255]);
    expect(pixelDiffCount(a, new Uint8ClampedArray(a))).toBe(0);
  });

  test("counts changed pixels, ignoring alpha", () => {
    const a = new Uint8ClampedArray([1, 2, 3, 255, 9, 9, 9, 255]);
    const b = new Uint8ClampedArray([1, 2, 4, 255, 9, 9, 9, 0]);
    expect(pixelDiffCount(a, b)).toBe(1);
  });

  test("rejects mismatched sizes", () => {
    expect(() => pixelDiffCount(new Uint8ClampedArray(4), new Uint8ClampedArray(8))).toThrow();
  });
});
