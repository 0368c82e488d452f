/**
 * End-to-end smoke against the real backend: spawn the Python service,
 * drive it through the same client + draft serializers the UI uses, and
 * check the exported archive re-renders bit-identically through the CLI.
 *
 * Skips itself when python3 (with the backend installed) is unavailable.
 */
import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, readdirSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, test } from "vitest";

import { StudioClient } from "../src/api/client";
import { defaultTrajectoryDraft, serializeTrajectory } from "../src/state/trajectoryDraft";
import { defaultTimelineDraft, serializeTimeline, timelineClipFrames } from "../src/state/timelineDraft";

const repoRoot = fileURLToPath(new URL("../..", import.meta.url));

const backendReady =
  spawnSync("python3", ["-c", "import trackvid.service, uvicorn"], { cwd: repoRoot }).status === 0;

function run(cmd: string, args: string[]): void {
  const res = spawnSync(cmd, args, { cwd: repoRoot, encoding: "utf8" });
  if (res.status !== 0) {
    throw new Error(`${cmd} ${args.join(" ")} failed:\n${res.stderr || res.stdout}`);
  }
}

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = createServer();
    srv.once("error", reject);
    srv.listen(0, "127.0.0.1", () => {
      const addr = srv.address();
      if (addr === null || typeof addr === "string") {
        srv.close(() => reject(new Error("could not allocate a port")));
        return;
      }
      const port = addr.port;
      srv.close(() => resolve(port));
    });
  });
}

async function waitForHealth(client: StudioClient, ms: number): Promise<void> {
  const deadline = Date.now() + ms;
  while (Date.now() < deadline) {
    if (await client.health()) return;
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error("backend did not become healthy in time");
}

describe.skipIf(!backendReady)("studio end-to-end smoke", () => {
  let workDir: string;
  let assetDir: string;
  let proc: ChildProcess;
  let client: StudioClient;

  beforeAll(async () => {
    workDir = mkdtempSync(join(tmpdir(), "studio-e2e-"));
    assetDir = join(workDir, "assets");
    run("python3", [
      "scripts/make_demo_assets.py",
      "--out", assetDir,
      "--width", "64",
      "--height", "48",
    ]);
    const port = await freePort();
    proc = spawn(
      "python3",
      ["-m", "uvicorn", "trackvid.service:app",
       "--host", "127.0.0.1", "--port", String(port), "--log-level", "warning"],
      { cwd: repoRoot, stdio: ["ignore", "inherit", "inherit"] },
    );
    client = new StudioClient(`http://127.0.0.1:${port}`);
    await waitForHealth(client, 60_000);
  });

  afterAll(() => {
    proc?.kill();
    if (workDir) rmSync(workDir, { recursive: true, force: true });
  });

  function uploadBlobs() {
    return {
      image: new Blob([readFileSync(join(assetDir, "ref.png"))], { type: "image/png" }),
      depth: new Blob([readFileSync(join(assetDir, "depth.pfm"))]),
    };
  }

  test("upload, preset preview, export: archive re-renders bit-identically", async () => {
    const { image, depth } = uploadBlobs();
    const session = await client.createSession({ image, depth, grid: 8 });
    expect(session.n_points).toBe(64);
    const pts = await client.points(session.id);
    expect(pts.points.length).toBe(64);

    const draft = defaultTrajectoryDraft();
    draft.kind = "right";
    draft.frames = 6;
    draft.magnitude = 0.3;
    const preview = await client.previewCamera(session.id, serializeTrajectory(draft));
    expect(preview.frames).toBe(6);

    const served: Buffer[] = [];
    for (let k = 0; k < preview.frames; k++) {
      const blob = await client.fetchFrame(preview.preview_id, k);
      served.push(Buffer.from(await blob.arrayBuffer()));
    }
    expect(served[0]!.equals(served[served.length - 1]!)).toBe(false); // camera moved

    const zipBlob = await client.exportArchive(session.id, { preview_id: preview.preview_id });
    const zipPath = join(workDir, "export.zip");
    writeFileSync(zipPath, Buffer.from(await zipBlob.arrayBuffer()));
    const extractDir = join(workDir, "extracted");
    run("python3", ["-m", "zipfile", "-e", zipPath, extractDir]);

    const names = readdirSync(extractDir).sort();
    expect(names).toContain("tracks.trk");
    expect(names).toContain("camera.json");
    expect(names).toContain("manifest.json");
    for (let k = 0; k < preview.frames; k++) {
      const name = `frame_${String(k).padStart(4, "0")}.png`;
      expect(readFileSync(join(extractDir, name)).equals(served[k]!)).toBe(true);
    }

    const rerenderDir = join(workDir, "rerender");
    run("python3", [
      "-m", "trackvid.cli", "tracks",
      "--input", join(extractDir, "tracks.trk"),
      "--camera", join(extractDir, "camera.json"),
      "--out", rerenderDir,
    ]);
    const pngs = names.filter((n) => n.endsWith(".png"));
    expect(pngs.length).toBe(preview.frames);
    for (const name of pngs) {
      const fromArchive = readFileSync(join(extractDir, name));
      const fromCli = readFileSync(join(rerenderDir, name));
      expect(fromCli.equals(fromArchive)).toBe(true);
    }
  });

  test("zero-magnitude preview holds every frame at frame 0", async () => {
    const { image, depth } = uploadBlobs();
    const session = await client.createSession({ image, depth, grid: 8 });

    const draft = defaultTrajectoryDraft();
    draft.frames = 4;
    draft.magnitude = 0;
    const preview = await client.previewCamera(session.id, serializeTrajectory(draft));

    const frame0 = Buffer.from(await (await client.fetchFrame(preview.preview_id, 0)).arrayBuffer());
    for (let k = 1; k < preview.frames; k++) {
      const fk = Buffer.from(await (await client.fetchFrame(preview.preview_id, k)).arrayBuffer());
      expect(fk.equals(frame0)).toBe(true);
    }
  });

  test("object preview accepts the timeline serializer's output", async () => {
    const { image, depth } = uploadBlobs();
    const session = await client.createSession({ image, depth, grid: 8 });
    const mask = new Blob([readFileSync(join(assetDir, "mask.pgm"))]);

    const draft = defaultTimelineDraft();
    const preview = await client.previewObject(
      session.id,
      mask,
      serializeTimeline(draft),
      timelineClipFrames(draft),
    );
    expect(preview.frames).toBe(49);

    const first = Buffer.from(await (await client.fetchFrame(preview.preview_id, 0)).arrayBuffer());
    const last = Buffer.from(
      await (await client.fetchFrame(preview.preview_id, preview.frames - 1)).arrayBuffer(),
    );
    expect(first.equals(last)).toBe(false); // the slab slid sideways
  });

  test("backend errors surface with their name and detail", async () => {
    await expect(client.points("0".repeat(32))).rejects.toMatchObject({
      status: 404,
      errorName: "NotFound",
    });
  });
});
