/**
 * Studio wiring: session loader + point cloud on the left, the two editors
 * with their scrubbers and export buttons on the right. All geometry and
 * pixels come from the service; this file only moves data between views.
 */
import "./style.css";

import { ServiceError, StudioClient } from "./api/client";
import { type TrajectorySpecJson } from "./api/schemas";
import { LatestWins } from "./state/latestWins";
import { type PreviewInfo } from "./api/schemas";
import { ExportPanel } from "./views/exportPanel";
import { PointCloudView } from "./views/pointCloud";
import { Scrubber } from "./views/scrubber";
import { SessionLoader } from "./views/sessionLoader";
import { StatusLine } from "./views/statusLine";
import { TimelineEditor, type TimelineChange } from "./views/timelineEditor";
import { TrajectoryEditor } from "./views/trajectoryEditor";

const client = new StudioClient("");
const status = new StatusLine();

let sessionId: string | null = null;
let lastTrajectory: TrajectorySpecJson | null = null;

const cameraRace = new LatestWins<PreviewInfo>();
const objectRace = new LatestWins<PreviewInfo>();

const cloudView = new PointCloudView();
const cameraScrubber = new Scrubber((pid, k) => client.frameUrl(pid, k));
const objectScrubber = new Scrubber((pid, k) => client.frameUrl(pid, k));

const cameraExport = new ExportPanel((pid) => client.exportArchive(sessionId!, { preview_id: pid }));
const objectExport = new ExportPanel((pid) => client.exportArchive(sessionId!, { preview_id: pid }));

async function requestCameraPreview(spec: TrajectorySpecJson): Promise<void> {
  if (!sessionId) return;
  lastTrajectory = spec;
  status.info("rendering camera preview...");
  try {
    const info = await cameraRace.request((signal) =>
      client.previewCamera(sessionId!, spec, signal),
    );
    if (!info) return; // superseded by a newer edit
    cameraScrubber.setPreview(info);
    cameraExport.setPreview(info.preview_id);
    status.info(`camera preview ${info.preview_id} (${info.frames} frames)`);
  } catch (err) {
    status.error(err);
  }
}

async function requestObjectPreview(change: TimelineChange): Promise<void> {
  if (!sessionId || !change.mask) return;
  status.info("rendering object preview...");
  try {
    const info = await objectRace.request((signal) =>
      client.previewObject(sessionId!, change.mask!, change.timeline, change.frames, signal),
    );
    if (!info) return;
    objectScrubber.setPreview(info);
    objectExport.setPreview(info.preview_id);
    status.info(`object preview ${info.preview_id} (${info.frames} frames)`);
  } catch (err) {
    status.error(err);
  }
}

const trajectoryEditor = new TrajectoryEditor((spec) => void requestCameraPreview(spec));
const timelineEditor = new TimelineEditor((change) => void requestObjectPreview(change));

const loader = new SessionLoader(async (req) => {
  status.info("uploading...");
  try {
    const info = await client.createSession({
      image: req.image,
      depth: req.depth,
      ...(req.grid !== undefined ? { grid: req.grid } : {}),
    });
    sessionId = info.id;
    status.info(`session ${info.id}: ${info.n_points} points`);
    const points = await client.points(info.id);
    cloudView.setPoints(points.points);
    if (lastTrajectory) await requestCameraPreview(lastTrajectory);
  } catch (err) {
    status.error(err);
    if (err instanceof ServiceError && err.status === 404) sessionId = null;
  }
});

function column(...children: HTMLElement[]): HTMLElement {
  const div = document.createElement("div");
  div.className = "column";
  div.append(...children);
  return div;
}

const root = document.getElementById("app");
if (root) {
  const header = document.createElement("h1");
  header.textContent = "tracking-video studio";

  const cameraPanel = document.createElement("div");
  cameraPanel.className = "panel card";
  cameraPanel.append(trajectoryEditor.el, cameraScrubber.el, cameraExport.el);

  const objectPanel = document.createElement("div");
  objectPanel.className = "panel card";
  objectPanel.append(timelineEditor.el, objectScrubber.el, objectExport.el);

  const layout = document.createElement("div");
  layout.className = "layout";
  layout.append(column(loader.el, cloudView.el), column(cameraPanel, objectPanel));

  root.append(header, status.el, layout);
  void client.health().then((ok) => {
    if (!ok) status.error(new Error("service unreachable; start `trackvid serve`"));
  });
}
