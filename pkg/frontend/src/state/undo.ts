/**
 * Snapshot-based undo. Editors commit a deep copy of the draft before
 * applying each edit; undo hands the previous copy back. The tests pin the
 * contract down to bytes: serialize(undo()) equals the pre-edit
 * serialization exactly.
 */
export class UndoStack<T> {
  private past: T[] = [];

  constructor(
    private readonly clone: (value: T) => T = (v) => structuredClone(v),
    private readonly limit = 200,
  ) {}

  get depth(): number {
    return this.past.length;
  }

  commit(state: T): void {
    this.past.push(this.clone(state));
    if (this.past.length > this.limit) this.past.shift();
  }

  undo(): T | undefined {
    return this.past.pop();
  }

  clear(): void {
    this.past = [];
  }
}
