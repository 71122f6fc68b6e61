/**
 * Renderer-independent scene model: one labeled unit cube per manifest,
 * driven by a HarnessEngine. Keeping this free of WebGL lets the tests
 * check cube counts and frame stepping without a DOM.
 */

import { HarnessEngine } from "./engine.js";
import { SceneBundle } from "./types.js";

export interface CubeSpec {
  /** Text rendered onto the cube faces (the producing object's name). */
  label: string;
  /** Index into engine.entities this cube tracks. */
  entityIndex: number;
}

export class HarnessScene {
  readonly engine: HarnessEngine;
  readonly cubes: CubeSpec[];

  constructor(bundle: SceneBundle) {
    this.engine = new HarnessEngine(bundle);
    this.cubes = bundle.manifests.map((m, i) => ({
      label: m.textureHint,
      entityIndex: i,
    }));
  }

  get frame(): number {
    return this.engine.frame;
  }

  /** One animation callback: advance the world exactly one fixed-dt tick. */
  animateFrame(): void {
    this.engine.stepFrame();
  }
}
