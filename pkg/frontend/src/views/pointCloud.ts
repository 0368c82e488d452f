/**
 * Orbitable colored point-cloud view. Display-only: the session's camera
 * frame is y-down/z-forward, three.js is y-up/z-backward, so points are
 * shown as (x, -y, -z). The cloud is decimated client-side; geometry math
 * stays on the server.
 */
import * as THREE from "three";
import { OrbitControls } from "three/examples/jsm/controls/OrbitControls.js";

import { type ColorPoint } from "../api/schemas";
import { decimate, VIEWER_POINT_CAP } from "../lib/decimate";

export class PointCloudView {
  readonly el: HTMLElement;
  private renderer: THREE.WebGLRenderer | null = null;
  private scene = new THREE.Scene();
  private camera: THREE.PerspectiveCamera;
  private controls: OrbitControls | null = null;
  private cloud: THREE.Points | null = null;
  private note: HTMLElement;

  constructor(width = 560, height = 420) {
    this.el = document.createElement("div");
    this.el.className = "pointcloud";
    this.note = document.createElement("div");
    this.note.className = "pointcloud-note";
    this.note.textContent = "load a session to see its point cloud";
    this.el.appendChild(this.note);

    this.camera = new THREE.PerspectiveCamera(50, width / height, 0.01, 100);
    this.camera.position.set(0, 0.4, 1.5);
    try {
      this.renderer = new THREE.WebGLRenderer({ antialias: true });
      this.renderer.setSize(width, height);
      this.renderer.setClearColor(0x10131a);
      this.el.appendChild(this.renderer.domElement);
      this.controls = new OrbitControls(this.camera, this.renderer.domElement);
      this.controls.enableDamping = true;
      const tick = () => {
        this.controls?.update();
        this.renderer?.render(this.scene, this.camera);
        requestAnimationFrame(tick);
      };
      requestAnimationFrame(tick);
    } catch {
      this.note.textContent = "WebGL unavailable; point-cloud view disabled";
    }
  }

  setPoints(points: ColorPoint[]): void {
    if (!this.renderer) return;
    if (this.cloud) {
      this.scene.remove(this.cloud);
      this.cloud.geometry.dispose();
      (this.cloud.material as THREE.Material).dispose();
    }
    const shown = decimate(points, VIEWER_POINT_CAP);
    const pos = new Float32Array(shown.length * 3);
    const col = new Float32Array(shown.length * 3);
    const center = new THREE.Vector3();
    shown.forEach((p, i) => {
      pos[3 * i] = p.x;
      pos[3 * i + 1] = -p.y;
      pos[3 * i + 2] = -p.z;
      col[3 * i] = p.r / 255;
      col[3 * i + 1] = p.g / 255;
      col[3 * i + 2] = p.b / 255;
      center.x += p.x;
      center.y += -p.y;
      center.z += -p.z;
    });
    if (shown.length > 0) center.divideScalar(shown.length);

    const geom = new THREE.BufferGeometry();
    geom.setAttribute("position", new THREE.BufferAttribute(pos, 3));
    geom.setAttribute("color", new THREE.BufferAttribute(col, 3));
    const mat = new THREE.PointsMaterial({ size: 0.02, vertexColors: true });
    this.cloud = new THREE.Points(geom, mat);
    this.scene.add(this.cloud);

    this.controls?.target.copy(center);
    this.camera.position.set(center.x, center.y + 0.5, center.z + 2.0);
    this.note.textContent = `${shown.length} of ${points.length} points shown`;
  }
}
