/**
 * At most one in-flight request per editor: starting a new request aborts
 * the previous one, and a stale response (resolved after being superseded)
 * is dropped instead of clobbering newer state.
 */
export class LatestWins<T> {
  private controller: AbortController | null = null;
  private seq = 0;

  /** Resolves with the result, or null if this request lost the race. */
  async request(run: (signal: AbortSignal) => Promise<T>): Promise<T | null> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    const ticket = ++this.seq;
    try {
      const result = await run(controller.signal);
      return ticket === this.seq ? result : null;
    } catch (err) {
      if (controller.signal.aborted) return null;
      throw err;
    }
  }

  cancel(): void {
    this.controller?.abort();
    this.controller = null;
    this.seq++;
  }
}
