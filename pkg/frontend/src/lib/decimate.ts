/** Deterministic strided subsample keeping the viewer under `cap` points. */
export const VIEWER_POINT_CAP = 20_000;

export function decimate<T>(items: readonly T[], cap: number = VIEWER_POINT_CAP): T[] {
  if (cap <= 0) return [];
  if (items.length <= cap) return [...items];
  const step = items.length / cap;
  const out: T[] = new Array(cap);
  for (let i = 0; i < cap; i++) {
    out[i] = items[Math.floor(i * step)] as T;
  }
  return out;
}
