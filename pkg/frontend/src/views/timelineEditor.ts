/**
 * Object-manipulation editor: mask upload, pivot mode, and a numeric
 * keyframe table (frame, quaternion, translation). Undo and serialization
 * follow the same snapshot contract as the trajectory editor.
 */
import { type TimelineFileJson } from "../api/schemas";
import {
  defaultTimelineDraft,
  serializeTimeline,
  timelineClipFrames,
  type TimelineKeyframeRow,
  type UiTimelineDraft,
} from "../state/timelineDraft";
import { UndoStack } from "../state/undo";
import { labeled } from "./sessionLoader";

export interface TimelineChange {
  timeline: TimelineFileJson;
  frames: number;
  mask: File | null;
}

export class TimelineEditor {
  readonly el: HTMLElement;
  draft: UiTimelineDraft = defaultTimelineDraft();
  private undoStack = new UndoStack<UiTimelineDraft>();
  private onChange: (change: TimelineChange) => void;
  private form: HTMLElement;
  private maskInput: HTMLInputElement;

  constructor(onChange: (change: TimelineChange) => void) {
    this.onChange = onChange;
    this.el = document.createElement("div");
    this.el.className = "editor card";
    const title = document.createElement("h2");
    title.textContent = "Object move";

    this.maskInput = document.createElement("input");
    this.maskInput.type = "file";
    this.maskInput.accept = ".pgm";
    this.maskInput.addEventListener("change", () => this.notify());

    const undoBtn = document.createElement("button");
    undoBtn.textContent = "Undo";
    undoBtn.addEventListener("click", () => this.undo());

    this.form = document.createElement("div");
    this.el.append(title, labeled("mask (.pgm)", this.maskInput), this.form, undoBtn);
    this.render();
  }

  private notify(): void {
    this.onChange({
      timeline: serializeTimeline(this.draft),
      frames: timelineClipFrames(this.draft),
      mask: this.maskInput.files?.[0] ?? null,
    });
  }

  private edit(mutate: (d: UiTimelineDraft) => void): void {
    this.undoStack.commit(this.draft);
    mutate(this.draft);
    this.render();
    this.notify();
  }

  undo(): void {
    const prev = this.undoStack.undo();
    if (!prev) return;
    this.draft = prev;
    this.render();
    this.notify();
  }

  private render(): void {
    this.form.replaceChildren();

    const pivot = document.createElement("select");
    for (const mode of ["centroid", "explicit"] as const) {
      const opt = document.createElement("option");
      opt.value = mode;
      opt.textContent = mode === "centroid" ? "pivot: centroid" : "pivot: fixed point";
      if (mode === this.draft.pivotMode) opt.selected = true;
      pivot.appendChild(opt);
    }
    pivot.addEventListener("change", () =>
      this.edit((d) => {
        d.pivotMode = pivot.value as UiTimelineDraft["pivotMode"];
      }),
    );
    this.form.appendChild(labeled("pivot", pivot));

    if (this.draft.pivotMode === "explicit") {
      (["x", "y", "z"] as const).forEach((axis, i) => {
        const input = document.createElement("input");
        input.type = "number";
        input.step = "0.05";
        input.value = String(this.draft.pivot[i]);
        input.addEventListener("change", () =>
          this.edit((d) => {
            d.pivot[i] = Number(input.value);
          }),
        );
        this.form.appendChild(labeled(`pivot ${axis}`, input));
      });
    }

    const frames = document.createElement("input");
    frames.type = "number";
    frames.value = String(this.draft.frames);
    frames.addEventListener("change", () =>
      this.edit((d) => {
        d.frames = Number(frames.value);
      }),
    );
    this.form.appendChild(labeled("frames", frames));

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

  private keyframeRow(row: TimelineKeyframeRow, index: number): HTMLTableRowElement {
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
