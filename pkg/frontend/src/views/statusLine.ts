/** One-line status area; service errors appear verbatim with their status code. */
import { ServiceError } from "../api/client";

export class StatusLine {
  readonly el: HTMLElement;

  constructor() {
    this.el = document.createElement("div");
    this.el.className = "status";
  }

  info(msg: string): void {
    this.el.classList.remove("status-error");
    this.el.textContent = msg;
  }

  error(err: unknown): void {
    this.el.classList.add("status-error");
    if (err instanceof ServiceError) {
      this.el.textContent = `${err.status} ${err.errorName}: ${err.detail}`;
    } else {
      this.el.textContent = String(err);
    }
  }

  clear(): void {
    this.el.classList.remove("status-error");
    this.el.textContent = "";
  }
}
