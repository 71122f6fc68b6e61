"""Emit portable scene bundles and per-frame update scripts for the harness.

The browser harness never executes model-generated program text: the JSON
manifest is the executable contract (validated against the published
schema) and the emitted class script is an illustrative export. A bundle
carries everything needed to re-simulate it, so ``world_from_bundle``
rebuilds a world whose trace is the reference the harness must match.
"""

from __future__ import annotations

import json
import re
from importlib import resources
from typing import Optional

from . import sim
from .errors import (
    InvalidALOError,
    NotFoundError,
    OutOfBoundsError,
    UnknownNameError,
    UnsupportedDialectError,
)
from .model import ALO, Condition, ManagerObject, PolicyRule, SkillSpec, StateVariable, SubObject, validate
from .registry import Registry, registry_get

SCHEMA_VERSION = 1
ENTITY_KIND = "unit-cube"
DIALECTS = ("harness-script",)


def camel_case(name: str) -> str:
    words = re.split(r"[^A-Za-z0-9]+", name)
    return "".join(w[:1].upper() + w[1:] for w in words if w)


def update_fn_name(name: str) -> str:
    return f"update{camel_case(name)}PerFrame"


def _state_value_json(var: StateVariable):
    if var.kind == "vector3":
        return list(var.value)
    return var.value


def emit_manifest(alo: ALO) -> dict:
    """Portable JSON description of one ALO's entities, skills and policy.

    Skill names shadowed across sub-objects keep only the first occurrence,
    matching the engine's first-wins lookup.
    """
    report = validate(alo)
    if not report.ok:
        raise InvalidALOError(report)
    skills: list[dict] = []
    seen: set[str] = set()
    for sub in alo.subObjList:
        for s in sub.skills:
            if s.name in seen:
                continue
            seen.add(s.name)
            skills.append({"name": s.name, "primitive": s.primitive,
                           "parameters": dict(s.parameters)})
    return {
        "aloName": alo.name,
        "entityKind": ENTITY_KIND,
        "textureHint": alo.name,
        "updateFnName": update_fn_name(alo.name),
        "skills": skills,
        "managerPolicy": [
            {
                "when": None if r.when is None else
                {"path": r.when.path, "op": r.when.op, "value": r.when.value},
                "skill": r.skill,
            }
            for r in alo.managerObj.policy
        ],
        "stateSet": list(alo.managerObj.stateSet),
        "initialManagerState": alo.managerObj.currentState,
        "initialStates": {
            f"{sub.name}.{key}": _state_value_json(sub.states[key])
            for sub in alo.subObjList for key in sorted(sub.states)
        },
    }


def emit_scene(reg: Registry, scenario: sim.Scenario) -> dict:
    """Bundle a scenario: one manifest per placed entity plus the rules."""
    scenario_names = {e.alo for e in scenario.entities}
    manifests = []
    for ent in scenario.entities:
        try:
            alo = registry_get(reg, ent.alo)
        except NotFoundError:
            raise UnknownNameError(f"scenario places unregistered ALO {ent.alo!r}") from None
        if not scenario.bounds.contains(ent.position):
            raise OutOfBoundsError(
                f"{ent.alo} at {tuple(ent.position)} outside {scenario.bounds}")
        manifest = emit_manifest(alo)
        manifest["position"] = list(ent.position)
        manifest["heading"] = ent.heading
        manifests.append(manifest)
    for rule in scenario.rules:
        for name in rule.pair + (rule.responder,):
            if name not in scenario_names:
                raise UnknownNameError(
                    f"interaction rule {rule.name!r} references {name!r},"
                    " which is not placed in the scenario")
    return {
        "schemaVersion": SCHEMA_VERSION,
        "worldBounds": {"min": list(scenario.bounds.min),
                        "max": list(scenario.bounds.max)},
        "dt": scenario.dt,
        "seed": scenario.seed,
        "manifests": manifests,
        "interactionRules": [
            {"name": r.name, "pair": list(r.pair), "triggerRadius": r.triggerRadius,
             "responder": r.responder, "responseSkill": r.responseSkill}
            for r in scenario.rules
        ],
    }


def bundle_json(bundle: dict) -> str:
    return json.dumps(bundle, sort_keys=True, indent=2) + "\n"


def load_schema() -> dict:
    text = (resources.files("alos") / "resources" / "schema"
            / "scene_bundle.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def check_bundle(bundle: dict) -> list[str]:
    """Structural schema check; returns human-readable problems."""
    problems: list[str] = []

    def need(obj, key, types, where):
        if not isinstance(obj, dict) or key not in obj:
            problems.append(f"{where}: missing {key!r}")
            return None
        if not isinstance(obj[key], types):
            problems.append(f"{where}: {key!r} has wrong type")
            return None
        return obj[key]

    version = need(bundle, "schemaVersion", int, "bundle")
    if version is not None and version != SCHEMA_VERSION:
        problems.append(f"bundle: unsupported schemaVersion {version}")
    bounds = need(bundle, "worldBounds", dict, "bundle")
    if bounds is not None:
        for key in ("min", "max"):
            arr = need(bounds, key, list, "worldBounds")
            if arr is not None and (len(arr) != 3 or
                                    not all(isinstance(c, (int, float)) for c in arr)):
                problems.append(f"worldBounds.{key}: expected 3 numbers")
    need(bundle, "dt", (int, float), "bundle")
    need(bundle, "seed", int, "bundle")
    manifests = need(bundle, "manifests", list, "bundle")
    names = set()
    if manifests is not None:
        for i, m in enumerate(manifests):
            where = f"manifests[{i}]"
            name = need(m, "aloName", str, where)
            if name:
                names.add(name)
            kind = need(m, "entityKind", str, where)
            if kind is not None and kind != ENTITY_KIND:
                problems.append(f"{where}: entityKind must be {ENTITY_KIND!r}")
            need(m, "textureHint", str, where)
            fn = need(m, "updateFnName", str, where)
            if name and fn and fn != update_fn_name(name):
                problems.append(f"{where}: updateFnName {fn!r} does not match name")
            skills = need(m, "skills", list, where)
            if skills is not None:
                for j, s in enumerate(skills):
                    sw = f"{where}.skills[{j}]"
                    need(s, "name", str, sw)
                    prim = need(s, "primitive", str, sw)
                    if prim is not None and prim not in (
                            "move", "rotate", "jump", "emit", "wander",
                            "flee", "seek", "idle"):
                        problems.append(f"{sw}: unknown primitive {prim!r}")
                    need(s, "parameters", dict, sw)
            need(m, "managerPolicy", list, where)
            need(m, "stateSet", list, where)
            need(m, "initialManagerState", str, where)
            need(m, "initialStates", dict, where)
            pos = need(m, "position", list, where)
            if pos is not None and len(pos) != 3:
                problems.append(f"{where}: position must have 3 components")
            need(m, "heading", (int, float), where)
    rules = need(bundle, "interactionRules", list, "bundle")
    if rules is not None:
        for i, r in enumerate(rules):
            where = f"interactionRules[{i}]"
            need(r, "name", str, where)
            pair = need(r, "pair", list, where)
            need(r, "triggerRadius", (int, float), where)
            responder = need(r, "responder", str, where)
            need(r, "responseSkill", str, where)
            if pair is not None:
                for name in pair:
                    if names and name not in names:
                        problems.append(f"{where}: pair member {name!r} not in bundle")
                if responder is not None and responder not in pair:
                    problems.append(f"{where}: responder {responder!r} not in pair")
    return problems


# --- bundle -> world reconstruction ------------------------------------------------


def _state_from_value(name: str, value) -> StateVariable:
    if isinstance(value, bool):
        return StateVariable(name, "boolean", value)
    if isinstance(value, (int, float)):
        return StateVariable(name, "scalar", float(value))
    if isinstance(value, list):
        return StateVariable(name, "vector3", tuple(float(c) for c in value))
    return StateVariable(name, "label", str(value), (str(value),))


def _condition_value(value):
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)):
        return float(value)
    return str(value)


def alo_from_manifest(manifest: dict) -> ALO:
    """Rebuild an executable ALO; domains are lost, simulation semantics are not."""
    grouped: dict[str, dict[str, StateVariable]] = {}
    for path, value in manifest.get("initialStates", {}).items():
        sub_name, _, state_name = path.partition(".")
        grouped.setdefault(sub_name, {})[state_name] = \
            _state_from_value(state_name, value)
    skills = tuple(
        SkillSpec(name=s["name"], primitive=s["primitive"],
                  parameters={k: (float(v) if isinstance(v, (int, float))
                                  and not isinstance(v, bool) else str(v))
                              for k, v in s.get("parameters", {}).items()})
        for s in manifest.get("skills", ()))
    sub_names = sorted(grouped) or ["core"]
    subs = []
    for i, sub_name in enumerate(sub_names):
        subs.append(SubObject(
            name=sub_name,
            skills=skills if i == 0 else (),
            states=grouped.get(sub_name, {})))
    policy = tuple(
        PolicyRule(
            skill=r["skill"],
            when=None if r.get("when") is None else Condition(
                path=r["when"]["path"], op=r["when"]["op"],
                value=_condition_value(r["when"]["value"])))
        for r in manifest.get("managerPolicy", ()))
    manager = ManagerObject(
        currentState=manifest["initialManagerState"],
        stateSet=tuple(manifest.get("stateSet", ())),
        policy=policy)
    name = manifest["aloName"]
    return ALO(name=name, mainObj=name, subObjList=tuple(subs),
               managerObj=manager, provenance="derived")


def world_from_bundle(bundle: dict) -> sim.World:
    problems = check_bundle(bundle)
    if problems:
        raise ValueError("invalid bundle: " + "; ".join(problems))
    bounds = sim.Box(tuple(float(c) for c in bundle["worldBounds"]["min"]),
                     tuple(float(c) for c in bundle["worldBounds"]["max"]))
    world = sim.spawn_world(bounds, int(bundle["seed"]))
    for manifest in bundle["manifests"]:
        sim.add_entity(world, alo_from_manifest(manifest),
                       manifest["position"], float(manifest.get("heading", 0.0)))
    for r in bundle["interactionRules"]:
        sim.bind_interaction(world, sim.InteractionRule(
            name=r["name"], pair=(r["pair"][0], r["pair"][1]),
            triggerRadius=float(r["triggerRadius"]), responder=r["responder"],
            responseSkill=r["responseSkill"]))
    return world


# --- update scripts -----------------------------------------------------------------


def _js_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return json.dumps(value)


_PRIMITIVE_CALLS = {
    "move": lambda p: f"this.object.moveForward({_js_value(p['speed'])}, dt);",
    "rotate": lambda p: f"this.object.turn({_js_value(p['rate'])}, dt);",
    "jump": lambda p: f"this.object.jump({_js_value(p['speed'])});",
    "emit": lambda p: f"this.object.emitSignal({json.dumps(str(p['signal']))});",
    "wander": lambda p: f"this.object.wander({_js_value(p['speed'])}, dt);",
    "flee": lambda p: (f"this.object.fleeNearest({_js_value(p['radius'])}, "
                       f"{_js_value(p['speed'])}, dt);"),
    "seek": lambda p: (f"this.object.seekNearest({_js_value(p['radius'])}, "
                       f"{_js_value(p['speed'])}, dt);"),
}


def emit_update_script(alo: ALO, dialect: str = "harness-script") -> str:
    """A class-shaped script: constructor takes the prepared 3D object, one
    per-frame method applies the policy as a switch over the skill states."""
    if dialect not in DIALECTS:
        raise UnsupportedDialectError(f"unknown dialect {dialect!r}")
    report = validate(alo)
    if not report.ok:
        raise InvalidALOError(report)
    cls = f"{camel_case(alo.name)}Behavior"
    lines = [
        f"// {alo.name}: generated behavior twin of the JSON manifest.",
        f"class {cls} {{",
        "  constructor(sceneObject) {",
        "    this.object = sceneObject;",
        f"    this.state = {json.dumps(alo.managerObj.currentState)};",
        "    this.reward = 0;",
        "  }",
        "",
        "  selectSkill(sensors) {",
    ]
    for rule in alo.managerObj.policy:
        if rule.is_cross_reference():
            lines.append(f"    // pair rule {json.dumps(rule.skill)} is resolved"
                         " by the world, not this entity")
            continue
        if rule.when is None:
            lines.append(f"    return {json.dumps(rule.skill)};")
            break
        cond = rule.when
        lines.append(f"    if (sensors[{json.dumps(cond.path)}] {cond.op} "
                     f"{_js_value(cond.value)}) return {json.dumps(rule.skill)};")
    else:
        lines.append('    return "idle";')
    lines += [
        "  }",
        "",
        f"  {update_fn_name(alo.name)}(dt, sensors) {{",
        "    const skill = this.selectSkill(sensors);",
        "    switch (skill) {",
    ]
    for sub in alo.subObjList:
        for skill in sub.skills:
            lines.append(f"      case {json.dumps(skill.name)}:")
            call = _PRIMITIVE_CALLS.get(skill.primitive)
            if call is not None:
                lines.append(f"        {call(skill.parameters)}")
            lines.append("        break;")
    lines += [
        "      default:",
        "        break;",
        "    }",
        "    if (" + " || ".join(
            f"skill === {json.dumps(s)}" for s in alo.managerObj.stateSet)
        + ") this.state = skill;",
        "  }",
        "}",
        "",
        f"export {{ {cls} }};",
    ]
    return "\n".join(lines) + "\n"
