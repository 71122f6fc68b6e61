/**
 * Three.js presentation layer: ground and sky, one textured unit cube per
 * manifest, a slow fixed orbit around the arena. Minimal by design; no
 * physics engine, no controls. All motion comes from the scene model's
 * fixed-dt engine, never from the wall clock.
 */

import * as THREE from "three";

import { HarnessScene } from "./scene.js";

function labelTexture(text: string): THREE.CanvasTexture {
  const canvas = document.createElement("canvas");
  canvas.width = 256;
  canvas.height = 256;
  const ctx = canvas.getContext("2d")!;
  ctx.fillStyle = "#f5f0e6";
  ctx.fillRect(0, 0, 256, 256);
  ctx.strokeStyle = "#665f53";
  ctx.lineWidth = 10;
  ctx.strokeRect(8, 8, 240, 240);
  ctx.fillStyle = "#222";
  ctx.font = "bold 34px sans-serif";
  ctx.textAlign = "center";
  ctx.textBaseline = "middle";
  const words = text.split(" ");
  words.forEach((word, i) => {
    ctx.fillText(word, 128, 128 + (i - (words.length - 1) / 2) * 40, 230);
  });
  return new THREE.CanvasTexture(canvas);
}

export class Renderer {
  private readonly renderer: THREE.WebGLRenderer;
  private readonly threeScene: THREE.Scene;
  private readonly camera: THREE.PerspectiveCamera;
  private readonly meshes: THREE.Mesh[] = [];
  private readonly center: THREE.Vector3;
  private orbitAngle = 0;

  constructor(private readonly scene: HarnessScene, container: HTMLElement) {
    const { boundsMin, boundsMax } = scene.engine;
    const spanX = boundsMax[0] - boundsMin[0];
    const spanZ = boundsMax[2] - boundsMin[2];
    this.center = new THREE.Vector3(
      (boundsMin[0] + boundsMax[0]) / 2, 0, (boundsMin[2] + boundsMax[2]) / 2);

    this.threeScene = new THREE.Scene();
    this.threeScene.background = new THREE.Color(0x9fd4ff); // the sky

    const ground = new THREE.Mesh(
      new THREE.PlaneGeometry(spanX, spanZ),
      new THREE.MeshLambertMaterial({ color: 0x8fbf6f }));
    ground.rotation.x = -Math.PI / 2;
    ground.position.copy(this.center);
    this.threeScene.add(ground);

    this.threeScene.add(new THREE.HemisphereLight(0xffffff, 0x557744, 1.1));

    for (const cube of this.scene.cubes) {
      const mesh = new THREE.Mesh(
        new THREE.BoxGeometry(1, 1, 1),
        new THREE.MeshLambertMaterial({ map: labelTexture(cube.label) }));
      this.threeScene.add(mesh);
      this.meshes.push(mesh);
    }

    this.camera = new THREE.PerspectiveCamera(
      50, container.clientWidth / container.clientHeight, 0.1, 1000);
    this.renderer = new THREE.WebGLRenderer({ antialias: true });
    this.renderer.setSize(container.clientWidth, container.clientHeight);
    container.appendChild(this.renderer.domElement);
  }

  /** Sync cube transforms with the engine and draw one frame. */
  render(): void {
    for (const cube of this.scene.cubes) {
      const entity = this.scene.engine.entities[cube.entityIndex];
      const mesh = this.meshes[this.scene.cubes.indexOf(cube)];
      mesh.position.set(
        entity.position[0], entity.position[1] + 0.5, entity.position[2]);
      mesh.rotation.y = -entity.heading;
    }
    this.orbitAngle += 0.0015; // fixed slow orbit, no user controls
    const radius = 70;
    this.camera.position.set(
      this.center.x + Math.cos(this.orbitAngle) * radius,
      40,
      this.center.z + Math.sin(this.orbitAngle) * radius);
    this.camera.lookAt(this.center);
    this.renderer.render(this.threeScene, this.camera);
  }
}
