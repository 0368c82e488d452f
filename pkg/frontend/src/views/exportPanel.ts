/** Export button: downloads the current preview's archive. */
export class ExportPanel {
  readonly el: HTMLElement;
  private button: HTMLButtonElement;
  private previewId: string | null = null;

  constructor(onExport: (previewId: string) => Promise<Blob>) {
    this.el = document.createElement("div");
    this.el.className = "export";
    this.button = document.createElement("button");
    this.button.textContent = "Export bundle";
    this.button.disabled = true;
    this.button.addEventListener("click", async () => {
      if (!this.previewId) return;
      const blob = await onExport(this.previewId);
      const a = document.createElement("a");
      a.href = URL.createObjectURL(blob);
      a.download = `${this.previewId}.zip`;
      a.click();
      URL.revokeObjectURL(a.href);
    });
    this.el.appendChild(this.button);
  }

  setPreview(previewId: string | null): void {
    this.previewId = previewId;
    this.button.disabled = previewId === null;
  }
}
