/** Upload form: reference image + PFM depth (+ optional grid) -> session. */
export interface SessionRequest {
  image: File;
  depth: File;
  grid?: number;
}

export class SessionLoader {
  readonly el: HTMLElement;
  private image: HTMLInputElement;
  private depth: HTMLInputElement;
  private grid: HTMLInputElement;
  private button: HTMLButtonElement;

  constructor(onLoad: (req: SessionRequest) => void) {
    this.el = document.createElement("div");
    this.el.className = "loader card";

    const title = document.createElement("h2");
    title.textContent = "Session";

    this.image = document.createElement("input");
    this.image.type = "file";
    this.image.accept = "image/*";
    this.depth = document.createElement("input");
    this.depth.type = "file";
    this.depth.accept = ".pfm";
    this.grid = document.createElement("input");
    this.grid.type = "number";
    this.grid.value = "70";
    this.grid.min = "1";

    this.button = document.createElement("button");
    this.button.textContent = "Load";
    this.button.addEventListener("click", () => {
      const image = this.image.files?.[0];
      const depth = this.depth.files?.[0];
      if (!image || !depth) return;
      const grid = Number(this.grid.value);
      onLoad({ image, depth, grid: Number.isFinite(grid) ? grid : undefined });
    });

    this.el.append(
      title,
      labeled("image (png/jpeg)", this.image),
      labeled("depth (.pfm)", this.depth),
      labeled("grid", this.grid),
      this.button,
    );
  }
}

export function labeled(text: string, input: HTMLElement): HTMLElement {
  const wrap = document.createElement("label");
  wrap.className = "field";
  const span = document.createElement("span");
  span.textContent = text;
  wrap.append(span, input);
  return wrap;
}
