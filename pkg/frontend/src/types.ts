/**
 * Scene-bundle types and validation.
 *
 * The bundle is the only contract with the Python side (scene.bundle.json,
 * schemaVersion 1). Loading rejects unknown versions outright; the rest of
 * the structural checks are shallow because the producer validates against
 * the published JSON schema before export.
 */

export const SUPPORTED_SCHEMA_VERSION = 1;

export type Vector3 = [number, number, number];

export interface WorldBounds {
  min: Vector3;
  max: Vector3;
}

export interface SkillSpec {
  name: string;
  primitive:
    | "move"
    | "rotate"
    | "jump"
    | "emit"
    | "wander"
    | "flee"
    | "seek"
    | "idle";
  parameters: Record<string, number | string>;
}

export interface PolicyCondition {
  path: string;
  op: "==" | "!=" | "<" | "<=" | ">" | ">=";
  value: number | string | boolean;
}

export interface PolicyRule {
  when: PolicyCondition | null;
  skill: string;
}

export type StateValue = number | string | boolean | number[];

export interface BehaviorManifest {
  aloName: string;
  entityKind: "unit-cube";
  textureHint: string;
  updateFnName: string;
  skills: SkillSpec[];
  managerPolicy: PolicyRule[];
  stateSet: string[];
  initialManagerState: string;
  initialStates: Record<string, StateValue>;
  position: Vector3;
  heading: number;
}

export interface InteractionRule {
  name: string;
  pair: [string, string];
  triggerRadius: number;
  responder: string;
  responseSkill: string;
}

export interface SceneBundle {
  schemaVersion: number;
  worldBounds: WorldBounds;
  dt: number;
  seed: number;
  manifests: BehaviorManifest[];
  interactionRules: InteractionRule[];
}

export class SchemaMismatchError extends Error {
  constructor(found: unknown) {
    super(
      `unsupported schemaVersion ${String(found)}; ` +
        `this harness speaks version ${SUPPORTED_SCHEMA_VERSION}`,
    );
    this.name = "SchemaMismatchError";
  }
}

export class FetchError extends Error {
  constructor(url: string, detail: string) {
    super(`cannot load bundle from ${url}: ${detail}`);
    this.name = "FetchError";
  }
}

function isVector3(v: unknown): v is Vector3 {
  return Array.isArray(v) && v.length === 3 && v.every((c) => typeof c === "number");
}

/** Validate a parsed JSON document into a SceneBundle. */
export function loadBundle(data: unknown): SceneBundle {
  if (typeof data !== "object" || data === null) {
    throw new Error("bundle must be a JSON object");
  }
  const doc = data as Record<string, unknown>;
  if (doc.schemaVersion !== SUPPORTED_SCHEMA_VERSION) {
    throw new SchemaMismatchError(doc.schemaVersion);
  }
  const bounds = doc.worldBounds as WorldBounds | undefined;
  if (!bounds || !isVector3(bounds.min) || !isVector3(bounds.max)) {
    throw new Error("bundle worldBounds must have numeric min/max triples");
  }
  if (typeof doc.dt !== "number" || doc.dt <= 0) {
    throw new Error("bundle dt must be a positive number");
  }
  if (!Array.isArray(doc.manifests) || !Array.isArray(doc.interactionRules)) {
    throw new Error("bundle needs manifests and interactionRules arrays");
  }
  for (const m of doc.manifests as BehaviorManifest[]) {
    if (!m.aloName || !isVector3(m.position) || !Array.isArray(m.skills)) {
      throw new Error("manifest needs aloName, position and skills");
    }
  }
  return doc as unknown as SceneBundle;
}

/** Fetch + parse + validate, for the browser entry point. */
export async function fetchBundle(url: string): Promise<SceneBundle> {
  let response: Response;
  try {
    response = await fetch(url);
  } catch (e) {
    throw new FetchError(url, String(e));
  }
  if (!response.ok) {
    throw new FetchError(url, `HTTP ${response.status}`);
  }
  return loadBundle(await response.json());
}
