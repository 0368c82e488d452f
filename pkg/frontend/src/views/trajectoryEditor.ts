/**
 * Camera-move editor: preset picker with numeric magnitude/radius/turns,
 * or a keyframe table for fully keyframed paths. Every committed edit
 * snapshots the draft for undo and fires onChange with the serialized spec.
 */
import { type TrajectorySpecJson, TRAJECTORY_KINDS } from "../api/schemas";
import {
  defaultTrajectoryDraft,
  serializeTrajectory,
  type TrajectoryKeyframeRow,
  type UiTrajectoryDraft,
} from "../state/trajectoryDraft";
import { UndoStack } from "../state/undo";
import { labeled } from "./sessionLoader";

export class TrajectoryEditor {
  readonly el: HTMLElement;
  draft: UiTrajectoryDraft = defaultTrajectoryDraft();
  private undoStack = new UndoStack<UiTrajectoryDraft>();
  private onChange: (spec: TrajectorySpecJson) => void;
  private form: HTMLElement;

  constructor(onChange: (spec: TrajectorySpecJson) => void) {
    this.onChange = onChange;
    this.el = document.createElement("div");
    this.el.className = "editor card";
    const title = document.createElement("h2");
    title.textContent = "Camera move";
    const undoBtn = document.createElement("button");
    undoBtn.textContent = "Undo";
    undoBtn.addEventListener("click", () => this.undo());
    this.form = document.createElement("div");
    this.el.append(title, this.form, undoBtn);
    this.render();
  }

  /** Snapshot, mutate, re-render, notify. All edits funnel through here. */
  private edit(mutate: (d: UiTrajectoryDraft) => void): void {
    this.undoStack.commit(this.draft);
    mutate(this.draft);
    this.render();
    this.onChange(serializeTrajectory(this.draft));
  }

  undo(): void {
    const prev = this.undoStack.undo();
    if (!prev) return;
    this.draft = prev;
    this.render();
    this.onChange(serializeTrajectory(this.draft));
  }

  private numberField(label: string, value: number, apply: (v: number) => void): HTMLElement {
    const input = document.createElement("input");
    input.type = "number";
    input.step = "0.05";
    input.value = String(value);
    input.addEventListener("change", () => this.edit(() => apply(Number(input.value))));
    return labeled(label, input);
  }

  private render(): void {
    this.form.replaceChildren();

    const kind = document.createElement("select");
    for (const k of TRAJECTORY_KINDS) {
      const opt = document.createElement("option");
      opt.value = k;
      opt.textContent = k;
      if (k === this.draft.kind) opt.selected = true;
      kind.appendChild(opt);
    }
    kind.addEventListener("change", () =>
      this.edit((d) => {
        d.kind = kind.value as UiTrajectoryDraft["kind"];
      }),
    );
    this.form.appendChild(labeled("preset", kind));

    if (this.draft.kind !== "keyframed") {
      this.form.append(
        this.numberField("frames", this.draft.frames, (v) => (this.draft.frames = v)),
        this.numberField("magnitude", this.draft.magnitude, (v) => (this.draft.magnitude = v)),
      );
      if (this.draft.kind === "spiral") {
        this.form.append(
          this.numberField("radius", this.draft.radius, (v) => (this.draft.radius = v)),
          this.numberField("turns", this.draft.turns, (v) => (this.draft.turns = v)),
        );
      }
      return;
    }

    const table = document.createElement("table");
    table.className = "kf-table";
    table.innerHTML =
      "<thead><tr><th>frame</th><th>qw</th><th>qx</th><th>qy</th><th>qz</th>" +
      "<th>tx</th><th>ty</th><th>tz</th><th></th></tr></thead>";
    const body = document.createElement("tbody");
    this.draft.keyframes.forEach((row, i) => body.appendChild(this.keyframeRow(row, i)));
    table.appendChild(body);

    const add = document.createElement("button");
    add.textContent = "+ keyframe";
    add.addEventListener("click", () =>
      this.edit((d) => {
        const last = d.keyframes[d.keyframes.length - 1];
        d.keyframes.push({
          frame: (last?.frame ?? 0) + 12,
          q: [1, 0, 0, 0],
          t: [0, 0, 0],
        });
      }),
    );
    this.form.append(table, add);
  }

  private keyframeRow(row: TrajectoryKeyframeRow, index: number): HTMLTableRowElement {
    const tr = document.createElement("tr");
    const cells: Array<[number, (v: number) => void]> = [
      [row.frame, (v) => (row.frame = v)],
      [row.q[0], (v) => (row.q[0] = v)],
      [row.q[1], (v) => (row.q[1] = v)],
      [row.q[2], (v) => (row.q[2] = v)],
      [row.q[3], (v) => (row.q[3] = v)],
      [row.t[0], (v) => (row.t[0] = v)],
      [row.t[1], (v) => (row.t[1] = v)],
      [row.t[2], (v) => (row.t[2] = v)],
    ];
    for (const [value, apply] of cells) {
      const td = document.createElement("td");
      const input = document.createElement("input");
      input.type = "number";
      input.step = "0.05";
      input.value = String(value);
      input.addEventListener("change", () => this.edit(() => apply(Number(input.value))));
      td.appendChild(input);
      tr.appendChild(td);
    }
    const td = document.createElement("td");
    const del = document.createElement("button");
    del.textContent = "x";
    del.addEventListener("click", () => this.edit((d) => d.keyframes.splice(index, 1)));
    td.appendChild(del);
    tr.appendChild(td);
    return tr;
  }
}
