/**
 * Live 3D view of the simulated workspace: end effector with gripper
 * jaws, scenario target, and rolling trails of commanded vs achieved
 * positions. Orbit controls on the scene camera; all state arrives from
 * engine_state messages, the console renders and nothing more.
 */

import * as THREE from "three";
import { OrbitControls } from "three/addons/controls/OrbitControls.js";

import { EngineStateMessage, PoseObject, SessionInfoMessage } from "./protocol";

const TRAIL_POINTS = 600;

function poseToMatrix(pose: PoseObject, out: THREE.Matrix4): THREE.Matrix4 {
  const r = pose.r;
  const p = pose.p;
  return out.set(
    r[0], r[1], r[2], p[0],
    r[3], r[4], r[5], p[1],
    r[6], r[7], r[8], p[2],
    0, 0, 0, 1,
  );
}

class Trail {
  readonly line: THREE.Line;
  private readonly positions: Float32Array;
  private count = 0;

  constructor(color: number) {
    this.positions = new Float32Array(TRAIL_POINTS * 3);
    const geometry = new THREE.BufferGeometry();
    geometry.setAttribute("position", new THREE.BufferAttribute(this.positions, 3));
    geometry.setDrawRange(0, 0);
    this.line = new THREE.Line(
      geometry,
      new THREE.LineBasicMaterial({ color, transparent: true, opacity: 0.8 }),
    );
    this.line.frustumCulled = false;
  }

  push(p: number[]): void {
    if (this.count === TRAIL_POINTS) {
      this.positions.copyWithin(0, 3);
      this.count -= 1;
    }
    this.positions.set(p, this.count * 3);
    this.count += 1;
    const geometry = this.line.geometry;
    geometry.setDrawRange(0, this.count);
    (geometry.getAttribute("position") as THREE.BufferAttribute).needsUpdate = true;
  }

  clear(): void {
    this.count = 0;
    this.line.geometry.setDrawRange(0, 0);
  }
}

export class TeleopScene {
  private readonly renderer: THREE.WebGLRenderer;
  private readonly scene = new THREE.Scene();
  private readonly camera: THREE.PerspectiveCamera;
  private readonly controls: OrbitControls;
  private readonly effector = new THREE.Group();
  private readonly jawLeft: THREE.Mesh;
  private readonly jawRight: THREE.Mesh;
  private readonly target = new THREE.Group();
  private readonly achievedTrail = new Trail(0x4caf50);
  private readonly commandedTrail = new Trail(0xffb300);
  private readonly poseMatrix = new THREE.Matrix4();

  constructor(canvas: HTMLCanvasElement) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.renderer.setPixelRatio(window.devicePixelRatio);
    this.scene.background = new THREE.Color(0x10141a);

    this.camera = new THREE.PerspectiveCamera(50, 1, 0.01, 20);
    this.camera.position.set(1.0, -0.7, 0.8);
    this.camera.up.set(0, 0, 1);
    this.controls = new OrbitControls(this.camera, canvas);
    this.controls.target.set(0.45, 0, 0.2);

    this.scene.add(new THREE.AmbientLight(0xffffff, 0.7));
    const sun = new THREE.DirectionalLight(0xffffff, 1.2);
    sun.position.set(1, -1, 2);
    this.scene.add(sun);

    const grid = new THREE.GridHelper(2, 20, 0x2c3440, 0x1d232c);
    grid.rotation.x = Math.PI / 2; // z-up workspace
    this.scene.add(grid);
    this.scene.add(new THREE.AxesHelper(0.15));

    // End effector: axis triad plus two gripper jaws whose gap tracks state.
    this.effector.add(new THREE.AxesHelper(0.08));
    const jawGeometry = new THREE.BoxGeometry(0.01, 0.04, 0.015);
    const jawMaterial = new THREE.MeshStandardMaterial({ color: 0x9aa7b8 });
    this.jawLeft = new THREE.Mesh(jawGeometry, jawMaterial);
    this.jawRight = new THREE.Mesh(jawGeometry, jawMaterial);
    this.effector.add(this.jawLeft, this.jawRight);
    const palm = new THREE.Mesh(
      new THREE.BoxGeometry(0.05, 0.02, 0.02),
      new THREE.MeshStandardMaterial({ color: 0x5c6b7f }),
    );
    palm.position.z = 0.025;
    this.effector.add(palm);
    this.effector.matrixAutoUpdate = false;
    this.scene.add(this.effector);

    this.scene.add(this.achievedTrail.line, this.commandedTrail.line);
    this.scene.add(this.target);
    this.target.visible = false;

    this.setGripper("open");
  }

  resize(width: number, height: number): void {
    this.renderer.setSize(width, height, false);
    this.camera.aspect = width / height;
    this.camera.updateProjectionMatrix();
  }

  setScenario(info: SessionInfoMessage["scenario"]): void {
    this.target.clear();
    this.target.visible = info !== null;
    if (!info) return;
    const ring = new THREE.Mesh(
      new THREE.TorusGeometry(0.02, 0.004, 12, 32),
      new THREE.MeshStandardMaterial({ color: 0xef5350 }),
    );
    const hole = new THREE.Mesh(
      new THREE.CylinderGeometry(0.012, 0.012, 0.05, 24, 1, true),
      new THREE.MeshStandardMaterial({
        color: 0xef9a9a, side: THREE.DoubleSide, transparent: true, opacity: 0.4,
      }),
    );
    hole.rotation.x = Math.PI / 2;
    hole.position.z = -0.025;
    this.target.add(ring, hole);
    const m = poseToMatrix(info.target_pose, this.poseMatrix);
    this.target.position.setFromMatrixPosition(m);
    this.target.quaternion.setFromRotationMatrix(m);
  }

  private setGripper(state: "open" | "closed"): void {
    const gap = state === "open" ? 0.02 : 0.004;
    this.jawLeft.position.set(-gap, 0, -0.01);
    this.jawRight.position.set(gap, 0, -0.01);
  }

  update(state: EngineStateMessage): void {
    poseToMatrix(state.pose, this.effector.matrix);
    this.setGripper(state.gripper);
    this.achievedTrail.push(state.pose.p);
    if (state.commanded) this.commandedTrail.push(state.commanded.p);
  }

  clearTrails(): void {
    this.achievedTrail.clear();
    this.commandedTrail.clear();
  }

  render(): void {
    this.controls.update();
    this.renderer.render(this.scene, this.camera);
  }
}
