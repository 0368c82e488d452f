/**
 * Count pixels whose RGB differs between two same-size RGBA buffers.
 * Backs the scrubber badge: with a zero-magnitude move every frame equals
 * frame 0 and the badge reads 0.
 */
export function pixelDiffCount(
  a: Uint8ClampedArray | Uint8Array,
  b: Uint8ClampedArray | Uint8Array,
): number {
  if (a.length !== b.length || a.length % 4 !== 0) {
    throw new Error(`buffers must be same-length RGBA, got ${a.length} vs ${b.length}`);
  }
  let diff = 0;
  for (let i = 0; i < a.length; i += 4) {
    if (a[i] !== b[i] || a[i + 1] !== b[i + 1] || a[i + 2] !== b[i + 2]) diff++;
  }
  return diff;
}
