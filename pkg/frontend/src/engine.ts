/**
 * Fixed-dt behavior engine: the executable half of a scene bundle.
 *
 * This mirrors the Python engine's tick pipeline operation for operation
 * (detect -> interaction rules -> manager policy -> kinematics -> clamp ->
 * log) so per-frame positions match the exported reference trace to well
 * under the 1e-6 parity budget. No wall clock: one stepFrame() call
 * advances exactly one tick of `dt` seconds from the bundle.
 *
 * Known divergence: `wander` needs the producer's seeded generator, which
 * this runtime does not replicate; it falls back to straight-ahead motion
 * and is excluded from parity scenarios.
 */

import {
  BehaviorManifest,
  InteractionRule,
  PolicyCondition,
  PolicyRule,
  SceneBundle,
  SkillSpec,
  StateValue,
  Vector3,
} from "./types.js";

const GRAVITY = 9.8;
const CONTACT_EPS = 1e-9;

export interface EntityState {
  id: string;
  aloName: string;
  position: Vector3;
  velocity: Vector3;
  heading: number;
  activeSkill: string;
  managerState: string;
  stateSet: Set<string>;
  policy: PolicyRule[];
  skills: Map<string, SkillSpec>;
  snapshot: Map<string, StateValue>;
  maxSpeed: number;
}

/** One line of the exported position log; the trace snapshot schema. */
export interface SnapshotRecord {
  tick: number;
  entity: string;
  alo: string;
  position: Vector3;
  velocity: Vector3;
  heading: number;
  activeSkill: string;
  managerState: string;
}

function entityFromManifest(manifest: BehaviorManifest, ordinal: number): EntityState {
  const skills = new Map<string, SkillSpec>();
  for (const skill of manifest.skills) {
    if (!skills.has(skill.name)) {
      skills.set(skill.name, skill);
    }
  }
  let maxSpeed = 0;
  for (const skill of skills.values()) {
    const speed = skill.parameters["speed"];
    if (typeof speed === "number" && speed > maxSpeed) {
      maxSpeed = speed;
    }
  }
  return {
    id: `${manifest.aloName}#${ordinal}`,
    aloName: manifest.aloName,
    position: [...manifest.position] as Vector3,
    velocity: [0, 0, 0],
    heading: manifest.heading,
    activeSkill: "idle",
    managerState: manifest.initialManagerState,
    stateSet: new Set(manifest.stateSet),
    policy: manifest.managerPolicy,
    skills,
    snapshot: new Map(Object.entries(manifest.initialStates)),
    maxSpeed,
  };
}

function dist(a: Vector3, b: Vector3): number {
  const dx = a[0] - b[0];
  const dy = a[1] - b[1];
  const dz = a[2] - b[2];
  return Math.sqrt(dx * dx + dy * dy + dz * dz);
}

function conditionHolds(cond: PolicyCondition, snapshot: Map<string, StateValue>): boolean {
  const left = snapshot.get(cond.path);
  const right = cond.value;
  if (left === undefined) {
    return false;
  }
  if (typeof left === "number" && typeof right === "number") {
    switch (cond.op) {
      case "==": return left === right;
      case "!=": return left !== right;
      case "<": return left < right;
      case "<=": return left <= right;
      case ">": return left > right;
      case ">=": return left >= right;
    }
  }
  if (typeof left === typeof right && (cond.op === "==" || cond.op === "!=")) {
    return cond.op === "==" ? left === right : left !== right;
  }
  return false;
}

export class HarnessEngine {
  readonly dt: number;
  readonly boundsMin: Vector3;
  readonly boundsMax: Vector3;
  readonly entities: EntityState[] = [];
  readonly rules: InteractionRule[];
  readonly log: SnapshotRecord[] = [];
  frame = 0;
  private wanderWarned = false;

  constructor(bundle: SceneBundle) {
    this.dt = bundle.dt;
    this.boundsMin = bundle.worldBounds.min;
    this.boundsMax = bundle.worldBounds.max;
    const ordinals = new Map<string, number>();
    for (const manifest of bundle.manifests) {
      const ordinal = ordinals.get(manifest.aloName) ?? 0;
      ordinals.set(manifest.aloName, ordinal + 1);
      this.entities.push(entityFromManifest(manifest, ordinal));
    }
    this.rules = bundle.interactionRules;
  }

  private diagonal(): number {
    const dx = this.boundsMax[0] - this.boundsMin[0];
    const dy = this.boundsMax[1] - this.boundsMin[1];
    const dz = this.boundsMax[2] - this.boundsMin[2];
    return Math.sqrt(dx * dx + dy * dy + dz * dz);
  }

  private detect(entity: EntityState): void {
    let nearest = this.diagonal();
    for (const other of this.entities) {
      if (other === entity) continue;
      const d = dist(entity.position, other.position);
      if (d < nearest) nearest = d;
    }
    const atBoundary = [0, 2].some(
      (i) =>
        entity.position[i] - this.boundsMin[i] <= CONTACT_EPS ||
        this.boundsMax[i] - entity.position[i] <= CONTACT_EPS,
    );
    entity.snapshot.set("sensors.distanceToNearest", nearest);
    entity.snapshot.set("sensors.atBoundary", atBoundary);
  }

  private interactionSkill(entity: EntityState): [string | null, EntityState | null] {
    for (const rule of this.rules) {
      if (entity.aloName !== rule.responder) continue;
      const otherName = rule.responder === rule.pair[1] ? rule.pair[0] : rule.pair[1];
      let nearest: EntityState | null = null;
      let nearestD = Infinity;
      for (const other of this.entities) {
        if (other === entity || other.aloName !== otherName) continue;
        const d = dist(entity.position, other.position);
        if (d < nearestD) {
          nearest = other;
          nearestD = d;
        }
      }
      if (nearest !== null && nearestD < rule.triggerRadius) {
        return [rule.responseSkill, nearest];
      }
    }
    return [null, null];
  }

  private policySkill(entity: EntityState): string | null {
    for (const rule of entity.policy) {
      if (rule.skill.includes(".")) continue; // cross references live in rules
      if (rule.when === null || conditionHolds(rule.when, entity.snapshot)) {
        return rule.skill;
      }
    }
    return null;
  }

  private nearestOther(entity: EntityState, radius: number): EntityState | null {
    let best: EntityState | null = null;
    let bestD = radius;
    for (const other of this.entities) {
      if (other === entity) continue;
      const d = dist(entity.position, other.position);
      if (d < bestD) {
        best = other;
        bestD = d;
      }
    }
    return best;
  }

  private execute(entity: EntityState, skillName: string | null,
                  trigger: EntityState | null): void {
    const spec = skillName !== null ? entity.skills.get(skillName) : undefined;
    const primitive = spec !== undefined ? spec.primitive : "idle";
    const params = spec !== undefined ? spec.parameters : {};
    const ymin = this.boundsMin[1];
    const grounded = entity.position[1] <= ymin + CONTACT_EPS;
    let [vx, vy, vz] = entity.velocity;

    switch (primitive) {
      case "move": {
        const speed = params["speed"] as number;
        vx = Math.cos(entity.heading) * speed;
        vz = Math.sin(entity.heading) * speed;
        break;
      }
      case "rotate": {
        entity.heading += (params["rate"] as number) * this.dt;
        vx = 0;
        vz = 0;
        break;
      }
      case "jump": {
        if (grounded) {
          vy = params["speed"] as number;
        }
        vx = 0;
        vz = 0;
        break;
      }
      case "emit": {
        vx = 0;
        vz = 0;
        break;
      }
      case "wander": {
        // No replicated RNG here: drift straight ahead instead of jittering.
        if (!this.wanderWarned) {
          console.warn("wander has no seeded jitter in the harness; moving straight");
          this.wanderWarned = true;
        }
        const speed = params["speed"] as number;
        vx = Math.cos(entity.heading) * speed;
        vz = Math.sin(entity.heading) * speed;
        break;
      }
      case "flee":
      case "seek": {
        let target = trigger;
        if (target === null) {
          target = this.nearestOther(entity, params["radius"] as number);
        }
        if (target === null) {
          vx = 0;
          vz = 0;
        } else {
          let dx = entity.position[0] - target.position[0];
          let dz = entity.position[2] - target.position[2];
          if (primitive === "seek") {
            dx = -dx;
            dz = -dz;
          }
          let norm = Math.sqrt(dx * dx + dz * dz);
          if (norm === 0) {
            dx = Math.cos(entity.heading);
            dz = Math.sin(entity.heading);
            norm = 1;
          }
          const speed = params["speed"] as number;
          vx = (dx / norm) * speed;
          vz = (dz / norm) * speed;
          entity.heading = Math.atan2(dz, dx);
        }
        break;
      }
      default:
        vx = 0;
        vz = 0;
    }

    if (entity.position[1] > ymin + CONTACT_EPS || vy > 0) {
      vy -= GRAVITY * this.dt;
    } else if (vy < 0) {
      vy = 0;
    }

    if (entity.maxSpeed > 0) {
      const mag = Math.sqrt(vx * vx + vy * vy + vz * vz);
      if (mag > entity.maxSpeed) {
        const scale = entity.maxSpeed / mag;
        vx *= scale;
        vy *= scale;
        vz *= scale;
      }
    }

    entity.velocity = [vx, vy, vz];
    for (let i = 0; i < 3; i++) {
      entity.position[i] += entity.velocity[i] * this.dt;
    }
    for (let i = 0; i < 3; i++) {
      if (entity.position[i] < this.boundsMin[i]) {
        entity.position[i] = this.boundsMin[i];
        if (entity.velocity[i] < 0) entity.velocity[i] = 0;
      } else if (entity.position[i] > this.boundsMax[i]) {
        entity.position[i] = this.boundsMax[i];
        if (entity.velocity[i] > 0) entity.velocity[i] = 0;
      }
    }
  }

  /** Advance exactly one tick; call once per animation frame. */
  stepFrame(): void {
    const tick = this.frame + 1;
    for (const entity of this.entities) {
      this.detect(entity);
      let [skillName, trigger] = this.interactionSkill(entity);
      if (skillName === null) {
        skillName = this.policySkill(entity);
      }
      this.execute(entity, skillName, trigger);
      const logged = skillName !== null ? skillName : "idle";
      if (entity.stateSet.has(logged)) {
        entity.managerState = logged;
      }
      entity.activeSkill = logged;
      this.log.push({
        tick,
        entity: entity.id,
        alo: entity.aloName,
        position: [...entity.position] as Vector3,
        velocity: [...entity.velocity] as Vector3,
        heading: entity.heading,
        activeSkill: logged,
        managerState: entity.managerState,
      });
    }
    this.frame = tick;
  }

  /** The per-frame position log as line-delimited JSON (trace schema). */
  logJsonl(): string {
    const lines = this.log.map((r) =>
      JSON.stringify({
        activeSkill: r.activeSkill,
        alo: r.alo,
        entity: r.entity,
        heading: r.heading,
        managerState: r.managerState,
        position: r.position,
        tick: r.tick,
        velocity: r.velocity,
      }),
    );
    return lines.length ? lines.join("\n") + "\n" : "";
  }
}
