/**
 * three.js scene for the guidance view.
 *
 * Pure view: object positions and orientations are copied from the
 * latest server record. The only client-side geometry is input
 * mapping — converting a click on the head mesh into a head-frame
 * point for a set_goal command.
 */

import * as THREE from "three";

import { coilGlyphStyle, headGlyphStyle } from "./hud.js";
import type { GuidanceState, Quat, Vec3 } from "./protocol.js";

const HEAD_RADIUS_MM = 90;

function applyPose(obj: THREE.Object3D, q: Quat, t: Vec3): void {
  // wire order is (w, x, y, z); three expects (x, y, z, w)
  obj.quaternion.set(q[1], q[2], q[3], q[0]);
  obj.position.set(t[0], t[1], t[2]);
}

function setGrayed(root: THREE.Object3D, grayed: boolean): void {
  root.traverse((o) => {
    const mesh = o as THREE.Mesh;
    const mat = mesh.material as THREE.MeshStandardMaterial | undefined;
    if (mat && "opacity" in mat) {
      mat.transparent = true;
      mat.opacity = grayed ? 0.25 : 1.0;
    }
  });
}

export class GuidanceScene {
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  private readonly renderer: THREE.WebGLRenderer;
  private readonly head: THREE.Group;
  private readonly headMesh: THREE.Mesh;
  private readonly coil: THREE.Group;
  private readonly targetMarker: THREE.Mesh;
  private readonly goalMarker: THREE.Mesh;
  private readonly trailGeom = new THREE.BufferGeometry();
  private readonly raycaster = new THREE.Raycaster();

  constructor(private readonly canvas: HTMLCanvasElement) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.camera = new THREE.PerspectiveCamera(
      45, canvas.clientWidth / canvas.clientHeight, 1, 5000,
    );
    this.camera.position.set(0, 250, 650);
    this.camera.lookAt(0, 0, 0);

    this.scene.background = new THREE.Color(0x10141a);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.6));
    const sun = new THREE.DirectionalLight(0xffffff, 1.2);
    sun.position.set(300, 600, 400);
    this.scene.add(sun);
    this.scene.add(new THREE.GridHelper(800, 16, 0x2a3340, 0x1b222c));

    this.head = new THREE.Group();
    this.headMesh = new THREE.Mesh(
      new THREE.SphereGeometry(HEAD_RADIUS_MM, 32, 24),
      new THREE.MeshStandardMaterial({ color: 0x7a8ba6, roughness: 0.8 }),
    );
    this.head.add(this.headMesh);
    this.head.add(new THREE.AxesHelper(60));
    this.scene.add(this.head);

    this.coil = new THREE.Group();
    const disc = new THREE.Mesh(
      new THREE.CylinderGeometry(30, 30, 8, 32),
      new THREE.MeshStandardMaterial({ color: 0x47c2ff, roughness: 0.4 }),
    );
    disc.rotation.x = Math.PI / 2; // face along the coil z axis
    this.coil.add(disc);
    const stem = new THREE.Mesh(
      new THREE.CylinderGeometry(4, 4, 40, 12),
      new THREE.MeshStandardMaterial({ color: 0x47c2ff }),
    );
    stem.rotation.x = Math.PI / 2;
    stem.position.z = 24;
    this.coil.add(stem);
    this.coil.add(new THREE.AxesHelper(40));
    this.scene.add(this.coil);

    this.targetMarker = new THREE.Mesh(
      new THREE.SphereGeometry(4, 16, 12),
      new THREE.MeshStandardMaterial({ color: 0xffdc00 }),
    );
    this.scene.add(this.targetMarker);

    this.goalMarker = new THREE.Mesh(
      new THREE.SphereGeometry(5, 16, 12),
      new THREE.MeshStandardMaterial({
        color: 0x2ecc40, wireframe: true,
      }),
    );
    this.scene.add(this.goalMarker);

    const trail = new THREE.Line(
      this.trailGeom,
      new THREE.LineBasicMaterial({ color: 0xffdc00 }),
    );
    this.head.add(trail); // trail points are head-frame
  }

  update(state: GuidanceState | null, trail: Vec3[]): void {
    const headStyle = headGlyphStyle(state);
    const coilStyle = coilGlyphStyle(state);
    this.head.visible = headStyle.visible;
    this.coil.visible = coilStyle.visible;
    if (state?.head) applyPose(this.head, state.head.q, state.head.t);
    if (state?.coil) applyPose(this.coil, state.coil.q, state.coil.t);
    setGrayed(this.head, headStyle.grayed);
    setGrayed(this.coil, coilStyle.grayed);

    // target and goal are head-frame points
    this.targetMarker.visible = !!state?.target;
    if (state?.target) {
      this.targetMarker.position.set(...state.target);
      this.head.localToWorld(this.targetMarker.position);
    }
    this.goalMarker.visible = !!state?.goal;
    if (state?.goal) {
      this.goalMarker.position.set(...state.goal);
      this.head.localToWorld(this.goalMarker.position);
    }

    this.trailGeom.setFromPoints(
      trail.map((p) => new THREE.Vector3(p[0], p[1], p[2])),
    );
  }

  render(): void {
    const w = this.canvas.clientWidth;
    const h = this.canvas.clientHeight;
    if (this.canvas.width !== w || this.canvas.height !== h) {
      this.renderer.setSize(w, h, false);
      this.camera.aspect = w / h;
      this.camera.updateProjectionMatrix();
    }
    this.renderer.render(this.scene, this.camera);
  }

  /** Head-frame point under a click, or null if the head was missed. */
  pickGoal(clientX: number, clientY: number): Vec3 | null {
    const rect = this.canvas.getBoundingClientRect();
    const ndc = new THREE.Vector2(
      ((clientX - rect.left) / rect.width) * 2 - 1,
      -((clientY - rect.top) / rect.height) * 2 + 1,
    );
    this.raycaster.setFromCamera(ndc, this.camera);
    const hits = this.raycaster.intersectObject(this.headMesh, false);
    const hit = hits[0];
    if (!hit) return null;
    const local = this.head.worldToLocal(hit.point.clone());
    return [local.x, local.y, local.z];
  }
}
