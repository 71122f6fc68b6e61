import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { HarnessEngine, SnapshotRecord } from "../src/engine.js";
import { HarnessScene } from "../src/scene.js";
import { SceneBundle, SchemaMismatchError, loadBundle } from "../src/types.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

function fixtureBundle(): SceneBundle {
  return loadBundle(
    JSON.parse(readFileSync(join(FIXTURES, "scene.bundle.json"), "utf-8")),
  );
}

function referenceLog(): SnapshotRecord[] {
  return readFileSync(join(FIXTURES, "snapshots.jsonl"), "utf-8")
    .split("\n")
    .filter((line) => line.length > 0)
    .map((line) => JSON.parse(line) as SnapshotRecord);
}

describe("bundle loading", () => {
  it("accepts the exported fixture", () => {
    const bundle = fixtureBundle();
    expect(bundle.manifests.length).toBe(2);
    expect(bundle.interactionRules.length).toBe(1);
  });

  it("rejects an unknown schemaVersion", () => {
    const doc = JSON.parse(
      readFileSync(join(FIXTURES, "scene.bundle.json"), "utf-8"),
    );
    doc.schemaVersion = 2;
    expect(() => loadBundle(doc)).toThrow(SchemaMismatchError);
  });

  it("rejects non-objects and missing fields", () => {
    expect(() => loadBundle(null)).toThrow();
    expect(() => loadBundle({ schemaVersion: 1 })).toThrow();
  });
});

describe("scene model", () => {
  it("spawns one cube per manifest, labeled with the texture hint", () => {
    const scene = new HarnessScene(fixtureBundle());
    expect(scene.cubes.length).toBe(2);
    expect(scene.cubes.map((c) => c.label)).toEqual(["cat", "roomba"]);
  });

  it("empty bundle yields an empty scene without error", () => {
    const bundle = fixtureBundle();
    bundle.manifests = [];
    bundle.interactionRules = [];
    const scene = new HarnessScene(bundle);
    expect(scene.cubes.length).toBe(0);
    scene.animateFrame();
    expect(scene.frame).toBe(1);
  });

  it("frame counter increments by exactly one per animation callback", () => {
    const scene = new HarnessScene(fixtureBundle());
    for (let i = 0; i < 10; i++) {
      expect(scene.frame).toBe(i);
      scene.animateFrame();
    }
    expect(scene.frame).toBe(10);
  });
});

describe("parity with the producing engine", () => {
  it("matches the exported trace to 1e-6 per coordinate over 300 frames", () => {
    const engine = new HarnessEngine(fixtureBundle());
    const reference = referenceLog();
    expect(reference.length).toBe(600); // 2 entities x 300 ticks

    for (let frame = 0; frame < 300; frame++) {
      engine.stepFrame();
    }
    expect(engine.log.length).toBe(reference.length);

    let worst = 0;
    for (let i = 0; i < reference.length; i++) {
      const ours = engine.log[i];
      const ref = reference[i];
      expect(ours.entity).toBe(ref.entity);
      expect(ours.tick).toBe(ref.tick);
      expect(ours.activeSkill).toBe(ref.activeSkill);
      expect(ours.managerState).toBe(ref.managerState);
      for (let c = 0; c < 3; c++) {
        const err = Math.abs(ours.position[c] - ref.position[c]);
        if (err > worst) worst = err;
        expect(err).toBeLessThanOrEqual(1e-6);
      }
    }
    // the run must actually contain the avoidance behavior
    expect(engine.log.some((r) => r.activeSkill === "flee")).toBe(true);
    expect(worst).toBeLessThanOrEqual(1e-6);
  });

  it("stays inside the world box at every frame", () => {
    const engine = new HarnessEngine(fixtureBundle());
    for (let frame = 0; frame < 300; frame++) {
      engine.stepFrame();
    }
    for (const record of engine.log) {
      for (let c = 0; c < 3; c++) {
        expect(record.position[c]).toBeGreaterThanOrEqual(engine.boundsMin[c]);
        expect(record.position[c]).toBeLessThanOrEqual(engine.boundsMax[c]);
      }
    }
  });

  it("exports the log in the trace snapshot schema", () => {
    const engine = new HarnessEngine(fixtureBundle());
    engine.stepFrame();
    const lines = engine.logJsonl().trimEnd().split("\n");
    expect(lines.length).toBe(2);
    const record = JSON.parse(lines[0]);
    expect(Object.keys(record).sort()).toEqual([
      "activeSkill", "alo", "entity", "heading",
      "managerState", "position", "tick", "velocity",
    ]);
  });
});
