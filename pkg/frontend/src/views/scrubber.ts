/**
 * Preview scrubber: a range input over frames 0..T-1, the current frame as
 * an <img>, and a badge counting pixels that differ from frame 0 (a
 * zero-motion preview therefore reads "diff 0 px").
 */
import { type PreviewInfo } from "../api/schemas";
import { pixelDiffCount } from "../lib/pixelDiff";

export class Scrubber {
  readonly el: HTMLElement;
  private img: HTMLImageElement;
  private range: HTMLInputElement;
  private label: HTMLElement;
  private badge: HTMLElement;
  private preview: PreviewInfo | null = null;
  private frameUrl: (pid: string, k: number) => string;
  private baseline: ImageData | null = null;

  constructor(frameUrl: (pid: string, k: number) => string) {
    this.frameUrl = frameUrl;
    this.el = document.createElement("div");
    this.el.className = "scrubber";

    this.img = document.createElement("img");
    this.img.className = "scrubber-frame";
    this.img.alt = "preview frame";

    this.range = document.createElement("input");
    this.range.type = "range";
    this.range.min = "0";
    this.range.value = "0";
    this.range.disabled = true;
    this.range.addEventListener("input", () => this.show(Number(this.range.value)));

    this.label = document.createElement("span");
    this.label.className = "scrubber-label";
    this.label.textContent = "no preview";

    this.badge = document.createElement("span");
    this.badge.className = "scrubber-badge";

    const bar = document.createElement("div");
    bar.className = "scrubber-bar";
    bar.append(this.range, this.label, this.badge);
    this.el.append(this.img, bar);
  }

  setPreview(info: PreviewInfo): void {
    this.preview = info;
    this.baseline = null;
    this.range.max = String(info.frames - 1);
    this.range.value = "0";
    this.range.disabled = false;
    this.show(0);
  }

  get position(): number {
    return Number(this.range.value);
  }

  private show(k: number): void {
    if (!this.preview) return;
    this.label.textContent = `frame ${k} / ${this.preview.frames - 1}`;
    this.img.src = this.frameUrl(this.preview.preview_id, k);
    this.img.onload = () => this.updateBadge(k);
  }

  private grab(): ImageData | null {
    try {
      const canvas = document.createElement("canvas");
      canvas.width = this.img.naturalWidth;
      canvas.height = this.img.naturalHeight;
      const ctx = canvas.getContext("2d");
      if (!ctx) return null;
      ctx.drawImage(this.img, 0, 0);
      return ctx.getImageData(0, 0, canvas.width, canvas.height);
    } catch {
      return null;
    }
  }

  private updateBadge(k: number): void {
    const data = this.grab();
    if (!data) {
      this.badge.textContent = "";
      return;
    }
    if (k === 0) {
      this.baseline = data;
      this.badge.textContent = "diff 0 px";
      return;
    }
    if (!this.baseline || this.baseline.data.length !== data.data.length) {
      this.badge.textContent = "";
      return;
    }
    this.badge.textContent = `diff ${pixelDiffCount(this.baseline.data, data.data)} px`;
  }
}
