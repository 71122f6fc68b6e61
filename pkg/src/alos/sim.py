"""Deterministic tick-based world that executes ALOs as embodied entities.

Every tick runs the same pipeline per entity in insertion order: detect
derived states (distance, boundary contact), let interaction rules preempt
the manager, otherwise pick the first matching policy rule, execute the
skill's kinematics, clamp to the world box (zeroing the normal velocity
component on contact), and log one step record. No wall clock, no physics
engine; the only randomness is the world's seeded generator consumed by
the wander primitive, so equal (world, dt, ticks) always produce
byte-identical traces.
"""

from __future__ import annotations

import copy
import json
import math
import random
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

from .canned import MEET_SEPARATOR
from .errors import (
    DegenerateBoundsError,
    InvalidALOError,
    MissingResponseSkillError,
    OutOfBoundsError,
    UnknownNameError,
)
from .model import ALO, StepObject, validate

DT = 1.0 / 60.0
GRAVITY = 9.8
DEFAULT_TRIGGER_RADIUS = 10.0
_CONTACT_EPS = 1e-9
_WANDER_TURN_DEFAULT = 0.5


@dataclass(frozen=True)
class Box:
    min: tuple[float, float, float] = (0.0, 0.0, 0.0)
    max: tuple[float, float, float] = (100.0, 100.0, 100.0)

    def contains(self, p: Sequence[float]) -> bool:
        return all(self.min[i] <= p[i] <= self.max[i] for i in range(3))

    def degenerate(self) -> bool:
        return any(self.min[i] >= self.max[i] for i in range(3))

    def diagonal(self) -> float:
        return math.sqrt(sum((self.max[i] - self.min[i]) ** 2 for i in range(3)))


@dataclass(frozen=True)
class InteractionRule:
    name: str
    pair: tuple[str, str]
    triggerRadius: float
    responder: str       # which pair member reacts
    responseSkill: str   # skill on the responder


@dataclass(frozen=True)
class Snapshot:
    tick: int
    entity: str
    alo: str
    position: tuple[float, float, float]
    velocity: tuple[float, float, float]
    heading: float
    activeSkill: str
    managerState: str


@dataclass
class Trace:
    steps: list[StepObject] = field(default_factory=list)
    snapshots: list[Snapshot] = field(default_factory=list)


class Entity:
    def __init__(self, entity_id: str, alo: ALO, position: Sequence[float],
                 heading: float = 0.0):
        self.id = entity_id
        self.alo = alo
        self.position = [float(c) for c in position]
        self.velocity = [0.0, 0.0, 0.0]
        self.heading = float(heading)
        self.active_skill: Optional[str] = None
        self.manager_state = alo.managerObj.currentState
        self.snapshot: dict[str, Any] = alo.state_snapshot()
        self.max_speed = max(
            (float(s.parameters["speed"])
             for sub in alo.subObjList for s in sub.skills
             if "speed" in s.parameters
             and isinstance(s.parameters["speed"], (int, float))),
            default=0.0)


class World:
    def __init__(self, bounds: Box, seed: int):
        self.bounds = bounds
        self.seed = seed
        self.rng = random.Random(seed)
        self.entities: list[Entity] = []
        self.rules: list[InteractionRule] = []
        self.tick = 0
        self.trace = Trace()
        self._step_index = 0

    def clone(self) -> "World":
        return copy.deepcopy(self)

    def entity_names(self) -> set[str]:
        return {e.alo.name for e in self.entities}


def spawn_world(bounds: Optional[Box] = None, seed: int = 0) -> World:
    bounds = bounds if bounds is not None else Box()
    if bounds.degenerate():
        raise DegenerateBoundsError(f"bounds {bounds} enclose no volume")
    return World(bounds=bounds, seed=seed)


def add_entity(world: World, alo: ALO, position: Sequence[float],
               heading: float = 0.0) -> World:
    report = validate(alo)
    if not report.ok:
        raise InvalidALOError(report)
    if not world.bounds.contains(position):
        raise OutOfBoundsError(f"position {tuple(position)} outside {world.bounds}")
    ordinal = sum(1 for e in world.entities if e.alo.name == alo.name)
    world.entities.append(Entity(f"{alo.name}#{ordinal}", alo, position, heading))
    return world


def bind_interaction(world: World, rule: InteractionRule) -> World:
    present = world.entity_names()
    for name in rule.pair:
        if name not in present:
            raise UnknownNameError(f"no entity for ALO {name!r} in world")
    if rule.responder not in rule.pair:
        raise UnknownNameError(f"responder {rule.responder!r} is not in the pair")
    responder_alo = next(e.alo for e in world.entities if e.alo.name == rule.responder)
    if responder_alo.find_skill(rule.responseSkill) is None:
        raise MissingResponseSkillError(
            f"{rule.responder!r} has no skill {rule.responseSkill!r}")
    world.rules.append(rule)
    return world


def interaction_rule_from_pair(pair_alo: ALO,
                               default_radius: float = DEFAULT_TRIGGER_RADIUS
                               ) -> InteractionRule:
    """Derive the rule a '<a> meets <b>' ALO encodes in its policy."""
    if MEET_SEPARATOR not in pair_alo.name:
        raise UnknownNameError(f"{pair_alo.name!r} is not a meets-pair ALO")
    a, _, b = pair_alo.name.partition(MEET_SEPARATOR)
    responder, skill = b, "flee"
    for rule in pair_alo.managerObj.policy:
        if rule.is_cross_reference():
            target_alo, target_skill = rule.cross_target()
            if target_alo in (a, b):
                responder, skill = target_alo, target_skill
                break
    radius = default_radius
    for sub in pair_alo.subObjList:
        var = sub.states.get("triggerRadius")
        if var is not None and var.kind == "scalar":
            radius = float(var.value)
            break
    return InteractionRule(name=pair_alo.name, pair=(a, b), triggerRadius=radius,
                           responder=responder, responseSkill=skill)


# --- the tick pipeline -----------------------------------------------------------


def _dist(a: Sequence[float], b: Sequence[float]) -> float:
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2)


def _detect(entity: Entity, world: World) -> None:
    nearest = world.bounds.diagonal()
    for other in world.entities:
        if other is entity:
            continue
        d = _dist(entity.position, other.position)
        if d < nearest:
            nearest = d
    # Wall contact only (x/z faces): resting on the ground is the normal
    # grounded condition, not a boundary event.
    at_boundary = any(
        entity.position[i] - world.bounds.min[i] <= _CONTACT_EPS
        or world.bounds.max[i] - entity.position[i] <= _CONTACT_EPS
        for i in (0, 2))
    entity.snapshot["sensors.distanceToNearest"] = nearest
    entity.snapshot["sensors.atBoundary"] = at_boundary


def _interaction_skill(entity: Entity, world: World):
    for rule in world.rules:
        if entity.alo.name != rule.responder:
            continue
        other_name = rule.pair[0] if rule.responder == rule.pair[1] else rule.pair[1]
        nearest = None
        nearest_d = math.inf
        for other in world.entities:
            if other is entity or other.alo.name != other_name:
                continue
            d = _dist(entity.position, other.position)
            if d < nearest_d:
                nearest, nearest_d = other, d
        if nearest is not None and nearest_d < rule.triggerRadius:
            return rule.responseSkill, nearest
    return None, None


def _condition_holds(cond, snapshot: dict) -> bool:
    left = snapshot.get(cond.path)
    right = cond.value
    if left is None:
        return False
    numeric = (lambda v: isinstance(v, (int, float)) and not isinstance(v, bool))
    if numeric(left) and numeric(right):
        return {"==": left == right, "!=": left != right, "<": left < right,
                "<=": left <= right, ">": left > right, ">=": left >= right}[cond.op]
    if type(left) is type(right) and cond.op in ("==", "!="):
        return (left == right) if cond.op == "==" else (left != right)
    return False


def _policy_skill(entity: Entity) -> Optional[str]:
    for rule in entity.alo.managerObj.policy:
        if rule.is_cross_reference():
            continue  # cross references configure interactions, not own motion
        if rule.when is None or _condition_holds(rule.when, entity.snapshot):
            return rule.skill
    return None


def _nearest_other(entity: Entity, world: World, radius: float) -> Optional[Entity]:
    best = None
    best_d = radius
    for other in world.entities:
        if other is entity:
            continue
        d = _dist(entity.position, other.position)
        if d < best_d:
            best, best_d = other, d
    return best


def _execute(entity: Entity, skill_name: Optional[str], trigger: Optional[Entity],
             world: World, dt: float) -> str:
    """Apply skill kinematics; returns the note text for the step record."""
    spec = entity.alo.find_skill(skill_name) if skill_name else None
    primitive = spec.primitive if spec is not None else "idle"
    params = spec.parameters if spec is not None else {}
    note = ""
    ymin = world.bounds.min[1]
    grounded = entity.position[1] <= ymin + _CONTACT_EPS
    vx, vy, vz = entity.velocity

    if primitive == "move":
        speed = float(params["speed"])
        vx = math.cos(entity.heading) * speed
        vz = math.sin(entity.heading) * speed
    elif primitive == "rotate":
        entity.heading += float(params["rate"]) * dt
        vx = vz = 0.0
    elif primitive == "jump":
        if grounded:
            vy = float(params["speed"])
        vx = vz = 0.0
    elif primitive == "emit":
        vx = vz = 0.0
        note = f"emit {params['signal']}"
    elif primitive == "wander":
        turn = float(params.get("turn", _WANDER_TURN_DEFAULT))
        entity.heading += world.rng.uniform(-turn, turn)
        speed = float(params["speed"])
        vx = math.cos(entity.heading) * speed
        vz = math.sin(entity.heading) * speed
    elif primitive in ("flee", "seek"):
        target = trigger
        if target is None:
            target = _nearest_other(entity, world, float(params["radius"]))
        if target is None:
            vx = vz = 0.0
        else:
            dx = entity.position[0] - target.position[0]
            dz = entity.position[2] - target.position[2]
            if primitive == "seek":
                dx, dz = -dx, -dz
            norm = math.sqrt(dx * dx + dz * dz)
            if norm == 0.0:
                dx, dz = math.cos(entity.heading), math.sin(entity.heading)
                norm = 1.0
            speed = float(params["speed"])
            vx = dx / norm * speed
            vz = dz / norm * speed
            entity.heading = math.atan2(dz, dx)
    else:  # idle
        vx = vz = 0.0

    # Ballistic continuation: gravity applies while airborne or just launched.
    if entity.position[1] > ymin + _CONTACT_EPS or vy > 0.0:
        vy -= GRAVITY * dt
    elif vy < 0.0:
        vy = 0.0

    # Hard speed cap from the declared skill parameters.
    if entity.max_speed > 0.0:
        mag = math.sqrt(vx * vx + vy * vy + vz * vz)
        if mag > entity.max_speed:
            scale = entity.max_speed / mag
            vx, vy, vz = vx * scale, vy * scale, vz * scale
    elif entity.max_speed == 0.0 and primitive not in ("rotate", "idle", "emit", "jump"):
        vx = vz = 0.0

    entity.velocity = [vx, vy, vz]
    for i in range(3):
        entity.position[i] += entity.velocity[i] * dt

    # Clamp to bounds, zeroing the normal velocity component at contact.
    for i in range(3):
        if entity.position[i] < world.bounds.min[i]:
            entity.position[i] = world.bounds.min[i]
            if entity.velocity[i] < 0.0:
                entity.velocity[i] = 0.0
        elif entity.position[i] > world.bounds.max[i]:
            entity.position[i] = world.bounds.max[i]
            if entity.velocity[i] > 0.0:
                entity.velocity[i] = 0.0
    return note


def step(world: World, dt: float = DT) -> World:
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    new_tick = world.tick + 1
    for entity in world.entities:
        _detect(entity, world)
        skill_name, trigger = _interaction_skill(entity, world)
        if skill_name is None:
            skill_name = _policy_skill(entity)
        note = _execute(entity, skill_name, trigger, world, dt)
        logged_skill = skill_name if skill_name is not None else "idle"
        if logged_skill in entity.alo.managerObj.stateSet:
            entity.manager_state = logged_skill
        entity.active_skill = logged_skill
        world.trace.steps.append(StepObject(
            index=world._step_index, tick=new_tick, actor=entity.id,
            skill=logged_skill, resultingState=entity.manager_state, note=note))
        world._step_index += 1
        world.trace.snapshots.append(Snapshot(
            tick=new_tick, entity=entity.id, alo=entity.alo.name,
            position=tuple(entity.position), velocity=tuple(entity.velocity),
            heading=entity.heading, activeSkill=logged_skill,
            managerState=entity.manager_state))
    world.tick = new_tick
    return world


def run(world: World, n_ticks: int, dt: float = DT) -> Trace:
    """Step n times; returns only the trace delta this call produced."""
    if n_ticks < 0:
        raise ValueError("n_ticks must be >= 0")
    steps_before = len(world.trace.steps)
    snaps_before = len(world.trace.snapshots)
    for _ in range(n_ticks):
        step(world, dt)
    return Trace(steps=world.trace.steps[steps_before:],
                 snapshots=world.trace.snapshots[snaps_before:])


# --- scenarios and export ----------------------------------------------------------


@dataclass(frozen=True)
class ScenarioEntity:
    alo: str
    position: tuple[float, float, float]
    heading: float = 0.0


@dataclass(frozen=True)
class Scenario:
    entities: tuple[ScenarioEntity, ...]
    rules: tuple[InteractionRule, ...] = ()
    bounds: Box = Box()
    seed: int = 0
    dt: float = DT


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "bounds": {"min": list(s.bounds.min), "max": list(s.bounds.max)},
        "seed": s.seed,
        "dt": s.dt,
        "entities": [
            {"alo": e.alo, "position": list(e.position), "heading": e.heading}
            for e in s.entities
        ],
        "rules": [
            {"name": r.name, "pair": list(r.pair), "triggerRadius": r.triggerRadius,
             "responder": r.responder, "responseSkill": r.responseSkill}
            for r in s.rules
        ],
    }


def scenario_from_dict(d: dict) -> Scenario:
    bounds = Box(tuple(float(c) for c in d.get("bounds", {}).get("min", (0, 0, 0))),
                 tuple(float(c) for c in d.get("bounds", {}).get("max", (100, 100, 100))))
    return Scenario(
        entities=tuple(
            ScenarioEntity(alo=e["alo"],
                           position=tuple(float(c) for c in e["position"]),
                           heading=float(e.get("heading", 0.0)))
            for e in d.get("entities", ())),
        rules=tuple(
            InteractionRule(name=r["name"], pair=(r["pair"][0], r["pair"][1]),
                            triggerRadius=float(r["triggerRadius"]),
                            responder=r["responder"], responseSkill=r["responseSkill"])
            for r in d.get("rules", ())),
        bounds=bounds,
        seed=int(d.get("seed", 0)),
        dt=float(d.get("dt", DT)),
    )


def build_world(scenario: Scenario, registry) -> World:
    """Instantiate a world from a scenario against a registry of ALOs."""
    from .registry import registry_get  # local import avoids a cycle

    world = spawn_world(scenario.bounds, scenario.seed)
    for ent in scenario.entities:
        add_entity(world, registry_get(registry, ent.alo), ent.position, ent.heading)
    for rule in scenario.rules:
        bind_interaction(world, rule)
    return world


def _dump(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def steps_jsonl(trace: Trace) -> str:
    lines = [_dump({"index": s.index, "tick": s.tick, "actor": s.actor,
                    "skill": s.skill, "resultingState": s.resultingState,
                    "note": s.note})
             for s in trace.steps]
    return "\n".join(lines) + ("\n" if lines else "")


def snapshots_jsonl(trace: Trace) -> str:
    lines = [_dump({"tick": s.tick, "entity": s.entity, "alo": s.alo,
                    "position": list(s.position), "velocity": list(s.velocity),
                    "heading": s.heading, "activeSkill": s.activeSkill,
                    "managerState": s.managerState})
             for s in trace.snapshots]
    return "\n".join(lines) + ("\n" if lines else "")
