"""Object model for Abstract Language Objects (ALOs).

An ALO is a named root object with a list of sub-objects (skills, knowledge,
typed state variables), a manager that selects skills through an ordered
policy, and an append-only step log. Instances are frozen dataclasses and
must be treated as immutable values after construction; every mutation is a
rebuild.

Validation is data, not exceptions: ``validate`` returns a report of coded
violations with paths like ``subObjList[0].states.battery`` so callers (and
the registry's birth hook) can decide what to do.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Optional, Sequence, Union

from .errors import (
    DanglingSkillReferenceError,
    DuplicateSubObjectError,
    EmptyNameError,
    InvalidALOError,
)

# Identifiers name ALOs, sub-objects, skills, states and labels. Dots are
# reserved for paths ("body.battery") and cross-ALO skill references
# ("roomba.flee"), pipes for markdown tables, so neither may appear inside.
_IDENT_RE = re.compile(r"^[A-Za-z0-9_](?:[A-Za-z0-9 _\-]*[A-Za-z0-9_\-])?$")
# Step actors additionally allow '#' because entity ids look like "cat#0".
_ACTOR_RE = re.compile(r"^[A-Za-z0-9_](?:[A-Za-z0-9 _\-#]*[A-Za-z0-9_\-#0-9])?$")

SKILL_PRIMITIVES = ("move", "rotate", "jump", "emit", "wander", "flee", "seek", "idle")

# Parameters each primitive must carry; numeric ones must be > 0.
REQUIRED_PARAMETERS = {
    "move": ("speed",),
    "rotate": ("rate",),
    "jump": ("speed",),
    "emit": ("signal",),
    "wander": ("speed",),
    "flee": ("radius", "speed"),
    "seek": ("radius", "speed"),
    "idle": (),
}

PROVENANCES = ("authored", "llm-generated", "derived")

STATE_KINDS = ("scalar", "boolean", "label", "vector3")

CONDITION_OPS = ("==", "!=", "<", "<=", ">", ">=")

Scalar = float
ParamValue = Union[float, str]
Vector3 = tuple[float, float, float]


def is_identifier(text: str) -> bool:
    return bool(_IDENT_RE.match(text))


def is_actor_id(text: str) -> bool:
    return bool(_ACTOR_RE.match(text))


@dataclass(frozen=True)
class Violation:
    code: str
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.code} at {self.path}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> tuple[str, ...]:
        return tuple(v.code for v in self.violations)

    def summary(self) -> str:
        if self.ok:
            return "no violations"
        return "; ".join(str(v) for v in self.violations)


@dataclass(frozen=True)
class StateVariable:
    """A typed state slot: scalar (with unit), boolean, label, or vector3."""

    name: str
    kind: str
    value: Any
    domain: Any = None  # (min, max) for scalar, tuple of labels for label
    unit: str = ""      # scalar only

    def check(self, path: str) -> list[Violation]:
        out: list[Violation] = []
        if not is_identifier(self.name):
            out.append(Violation("InvalidIdentifier", path, f"bad state name {self.name!r}"))
        if self.kind not in STATE_KINDS:
            out.append(Violation("UnknownStateKind", path, f"kind {self.kind!r}"))
            return out
        if self.kind == "scalar":
            if not isinstance(self.value, (int, float)) or isinstance(self.value, bool):
                out.append(Violation("BadValueType", path, "scalar value must be numeric"))
                return out
            if not math.isfinite(self.value):
                out.append(Violation("NonFiniteValue", path, "scalar value must be finite"))
                return out
            if self.domain is not None:
                lo, hi = self.domain
                if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                    out.append(Violation("BadDomain", path, f"bad scalar domain {self.domain!r}"))
                elif not (lo <= self.value <= hi):
                    out.append(Violation(
                        "DomainExceeded", path,
                        f"value {self.value!r} outside [{lo}, {hi}]"))
        elif self.kind == "boolean":
            if not isinstance(self.value, bool):
                out.append(Violation("BadValueType", path, "boolean value must be bool"))
        elif self.kind == "label":
            if not isinstance(self.value, str):
                out.append(Violation("BadValueType", path, "label value must be a string"))
                return out
            if not is_identifier(self.value):
                out.append(Violation("InvalidIdentifier", path, f"bad label {self.value!r}"))
            labels = tuple(self.domain or ())
            if self.value not in labels:
                out.append(Violation(
                    "DomainExceeded", path,
                    f"label {self.value!r} not in {{{', '.join(labels)}}}"))
        elif self.kind == "vector3":
            v = self.value
            if (not isinstance(v, tuple)) or len(v) != 3:
                out.append(Violation("BadValueType", path, "vector3 value must be a 3-tuple"))
                return out
            if not all(isinstance(c, (int, float)) and not isinstance(c, bool)
                       and math.isfinite(c) for c in v):
                out.append(Violation("NonFiniteValue", path, "vector3 components must be finite"))
        return out


@dataclass(frozen=True)
class SkillSpec:
    """A named behavior backed by one of the engine primitives.

    ``note`` preserves the original verb when an unknown primitive from a
    parsed document was downgraded to idle.
    """

    name: str
    primitive: str
    parameters: Mapping[str, ParamValue] = field(default_factory=dict)
    note: str = ""

    def check(self, path: str) -> list[Violation]:
        out: list[Violation] = []
        if not is_identifier(self.name):
            out.append(Violation("InvalidIdentifier", path, f"bad skill name {self.name!r}"))
        if self.primitive not in SKILL_PRIMITIVES:
            out.append(Violation("UnknownPrimitive", path, f"primitive {self.primitive!r}"))
            return out
        for req in REQUIRED_PARAMETERS[self.primitive]:
            if req not in self.parameters:
                out.append(Violation(
                    "MissingSkillParameter", path,
                    f"{self.primitive} requires parameter {req!r}"))
            else:
                val = self.parameters[req]
                if req != "signal":
                    if not isinstance(val, (int, float)) or isinstance(val, bool):
                        out.append(Violation(
                            "InvalidSkillParameter", path, f"{req} must be numeric"))
                    elif not (math.isfinite(val) and val > 0):
                        out.append(Violation(
                            "InvalidSkillParameter", path, f"{req} must be > 0"))
        for key, val in self.parameters.items():
            if not is_identifier(key):
                out.append(Violation("InvalidIdentifier", path, f"bad parameter name {key!r}"))
            if isinstance(val, str) and not is_identifier(val):
                out.append(Violation("InvalidIdentifier", path, f"bad parameter value {val!r}"))
            if isinstance(val, float) and not math.isfinite(val):
                out.append(Violation("NonFiniteValue", path, f"parameter {key} not finite"))
        # The note is the original verb of a downgraded skill; it must not read
        # back as a known primitive or the round trip would change meaning.
        if self.note and (not re.match(r"^[A-Za-z0-9_\-]+$", self.note)
                          or self.note in SKILL_PRIMITIVES):
            out.append(Violation("BadSkillNote", path, f"bad skill note {self.note!r}"))
        return out


@dataclass(frozen=True)
class SubObject:
    name: str
    skills: tuple[SkillSpec, ...] = ()
    knowledge: tuple[str, ...] = ()
    states: Mapping[str, StateVariable] = field(default_factory=dict)

    def check(self, path: str) -> list[Violation]:
        out: list[Violation] = []
        if not is_identifier(self.name):
            out.append(Violation("InvalidIdentifier", path, f"bad sub-object name {self.name!r}"))
        seen: set[str] = set()
        for j, skill in enumerate(self.skills):
            spath = f"{path}.skills[{j}]"
            if skill.name in seen:
                out.append(Violation("DuplicateSkill", spath, f"skill {skill.name!r} repeated"))
            seen.add(skill.name)
            out.extend(skill.check(spath))
        for fact in self.knowledge:
            if "\n" in fact or fact != fact.strip() or not fact:
                out.append(Violation(
                    "BadKnowledgeText", f"{path}.knowledge",
                    f"facts must be non-empty single lines, got {fact!r}"))
        for key, var in self.states.items():
            vpath = f"{path}.states.{key}"
            if key != var.name:
                out.append(Violation("StateKeyMismatch", vpath,
                                     f"map key {key!r} != variable name {var.name!r}"))
            out.extend(var.check(vpath))
        return out

    def skill_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.skills)


@dataclass(frozen=True)
class Condition:
    """Comparison over one state path, e.g. ``body.battery < 20``."""

    path: str   # "<sub>.<state>" (or "sensors.<derived>" at run time)
    op: str
    value: Union[float, bool, str]

    def check(self, path: str) -> list[Violation]:
        out: list[Violation] = []
        if self.op not in CONDITION_OPS:
            out.append(Violation("UnknownOperator", path, f"op {self.op!r}"))
        if self.path.count(".") != 1:
            out.append(Violation("BadConditionPath", path, f"path {self.path!r}"))
        return out


@dataclass(frozen=True)
class PolicyRule:
    """``when <condition> do <skill>``; a None condition always matches.

    The target may be a plain skill name (resolved against this ALO's
    sub-objects) or a cross reference ``<alo name>.<skill>`` resolved by
    the registry at put time.
    """

    skill: str
    when: Optional[Condition] = None

    def is_cross_reference(self) -> bool:
        return "." in self.skill

    def cross_target(self) -> tuple[str, str]:
        alo_name, _, skill = self.skill.partition(".")
        return alo_name, skill


@dataclass(frozen=True)
class ManagerObject:
    currentState: str
    stateSet: tuple[str, ...]
    policy: tuple[PolicyRule, ...] = ()
    rewardAccumulator: float = 0.0

    def check(self, path: str, own_skills: Iterable[str]) -> list[Violation]:
        out: list[Violation] = []
        labels = set(self.stateSet)
        for label in self.stateSet:
            if not is_identifier(label):
                out.append(Violation("InvalidIdentifier", f"{path}.stateSet",
                                     f"bad state label {label!r}"))
        if self.currentState not in labels:
            out.append(Violation("UnknownManagerState", f"{path}.currentState",
                                 f"{self.currentState!r} not in stateSet"))
        skills = set(own_skills)
        for i, rule in enumerate(self.policy):
            rpath = f"{path}.policy[{i}]"
            if rule.when is not None:
                out.extend(rule.when.check(rpath))
            if rule.is_cross_reference():
                alo_name, skill = rule.cross_target()
                if not (is_identifier(alo_name) and is_identifier(skill)):
                    out.append(Violation("InvalidIdentifier", rpath,
                                         f"bad cross reference {rule.skill!r}"))
                # Target existence is registry-scope; checked by the birth hook.
            elif rule.skill not in skills:
                out.append(Violation("DanglingSkillReference", rpath,
                                     f"policy targets unknown skill {rule.skill!r}"))
        if not (isinstance(self.rewardAccumulator, (int, float))
                and math.isfinite(self.rewardAccumulator)):
            out.append(Violation("NonFiniteValue", f"{path}.reward",
                                 "reward accumulator must be finite"))
        return out


@dataclass(frozen=True)
class StepObject:
    index: int
    tick: int
    actor: str
    skill: str
    resultingState: str
    note: str = ""

    def check(self, path: str) -> list[Violation]:
        out: list[Violation] = []
        if self.index < 0:
            out.append(Violation("BadStepIndex", path, "index must be >= 0"))
        if not is_actor_id(self.actor):
            out.append(Violation("InvalidIdentifier", path, f"bad actor {self.actor!r}"))
        if "\n" in self.note:
            out.append(Violation("BadNoteText", path, "note must be a single line"))
        return out


@dataclass(frozen=True)
class ALO:
    name: str
    mainObj: str
    subObjList: tuple[SubObject, ...]
    managerObj: ManagerObject
    stepObjList: tuple[StepObject, ...] = ()
    provenance: str = "authored"

    def sub(self, name: str) -> SubObject:
        for s in self.subObjList:
            if s.name == name:
                return s
        raise KeyError(name)

    def all_skill_names(self) -> tuple[str, ...]:
        return tuple(n for s in self.subObjList for n in s.skill_names())

    def find_skill(self, name: str) -> Optional[SkillSpec]:
        for s in self.subObjList:
            for spec in s.skills:
                if spec.name == name:
                    return spec
        return None

    def state_snapshot(self) -> dict[str, Any]:
        """Flattened "<sub>.<state>" -> value map used by policy evaluation."""
        snap: dict[str, Any] = {}
        for s in self.subObjList:
            for key, var in s.states.items():
                snap[f"{s.name}.{key}"] = var.value
        return snap


def validate(alo: ALO) -> ValidationReport:
    """Check every type invariant; an empty report means the ALO is sound."""
    out: list[Violation] = []
    if not alo.name:
        out.append(Violation("EmptyName", "name", "name must be non-empty"))
    elif not is_identifier(alo.name):
        out.append(Violation("InvalidIdentifier", "name", f"bad name {alo.name!r}"))
    if alo.mainObj != alo.name:
        out.append(Violation("MainObjMismatch", "mainObj",
                             f"mainObj {alo.mainObj!r} must equal name {alo.name!r}"))
    if alo.provenance not in PROVENANCES:
        out.append(Violation("UnknownProvenance", "provenance", f"{alo.provenance!r}"))

    seen: set[str] = set()
    for i, sub in enumerate(alo.subObjList):
        path = f"subObjList[{i}]"
        if sub.name in seen:
            out.append(Violation("DuplicateSubObject", path,
                                 f"sub-object {sub.name!r} repeated"))
        seen.add(sub.name)
        out.extend(sub.check(path))

    out.extend(alo.managerObj.check("managerObj", alo.all_skill_names()))

    last_index = -1
    last_tick = None
    for k, step in enumerate(alo.stepObjList):
        path = f"stepObjList[{k}]"
        out.extend(step.check(path))
        if step.index <= last_index:
            out.append(Violation("BadStepIndex", path, "indices must strictly increase"))
        last_index = step.index
        if last_tick is not None and step.tick < last_tick:
            out.append(Violation("NonMonotonicTick", path, "ticks must not decrease"))
        last_tick = step.tick
    return ValidationReport(tuple(out))


def new_alo(name: str, subobjects: Sequence[SubObject], manager: ManagerObject) -> ALO:
    """Build an authored ALO with an empty step log; raises on invalid input."""
    if not name:
        raise EmptyNameError("ALO name must be non-empty")
    alo = ALO(name=name, mainObj=name, subObjList=tuple(subobjects),
              managerObj=manager, stepObjList=(), provenance="authored")
    report = validate(alo)
    if report.ok:
        return alo
    first = report.violations[0]
    if first.code == "DuplicateSubObject":
        raise DuplicateSubObjectError(str(first))
    if first.code == "EmptyName":
        raise EmptyNameError(str(first))
    if first.code == "DanglingSkillReference":
        raise DanglingSkillReferenceError(str(first))
    raise InvalidALOError(report)


def with_provenance(alo: ALO, provenance: str) -> ALO:
    return replace(alo, provenance=provenance)


# --- JSON mirror -------------------------------------------------------------

def _state_to_dict(var: StateVariable) -> dict:
    d: dict[str, Any] = {"name": var.name, "kind": var.kind}
    if var.kind == "vector3":
        d["value"] = list(var.value)
    else:
        d["value"] = var.value
    if var.kind == "scalar":
        d["domain"] = list(var.domain) if var.domain is not None else None
        d["unit"] = var.unit
    elif var.kind == "label":
        d["domain"] = list(var.domain or ())
    else:
        d["domain"] = None
    return d


def _state_from_dict(d: Mapping) -> StateVariable:
    kind = d["kind"]
    value = d["value"]
    domain = d.get("domain")
    if kind == "vector3":
        value = tuple(float(c) for c in value)
    elif kind == "scalar":
        value = float(value)
        domain = tuple(float(x) for x in domain) if domain is not None else None
    elif kind == "label":
        domain = tuple(domain or ())
    return StateVariable(name=d["name"], kind=kind, value=value,
                         domain=domain, unit=d.get("unit", ""))


def to_dict(alo: ALO) -> dict:
    """Exact field mirror used by the .alo.json sidecar."""
    return {
        "name": alo.name,
        "mainObj": alo.mainObj,
        "provenance": alo.provenance,
        "subObjList": [
            {
                "name": s.name,
                "skills": [
                    {"name": sk.name, "primitive": sk.primitive,
                     "parameters": dict(sk.parameters), "note": sk.note}
                    for sk in s.skills
                ],
                "knowledge": list(s.knowledge),
                "states": {k: _state_to_dict(v) for k, v in s.states.items()},
            }
            for s in alo.subObjList
        ],
        "managerObj": {
            "currentState": alo.managerObj.currentState,
            "stateSet": list(alo.managerObj.stateSet),
            "policy": [
                {
                    "when": None if r.when is None else
                    {"path": r.when.path, "op": r.when.op, "value": r.when.value},
                    "skill": r.skill,
                }
                for r in alo.managerObj.policy
            ],
            "rewardAccumulator": alo.managerObj.rewardAccumulator,
        },
        "stepObjList": [
            {"index": st.index, "tick": st.tick, "actor": st.actor,
             "skill": st.skill, "resultingState": st.resultingState, "note": st.note}
            for st in alo.stepObjList
        ],
    }


def _param_from_json(value: Any) -> ParamValue:
    if isinstance(value, bool):
        raise ValueError("skill parameters are scalars or labels, not booleans")
    if isinstance(value, (int, float)):
        return float(value)
    return str(value)


def from_dict(d: Mapping) -> ALO:
    subs = tuple(
        SubObject(
            name=s["name"],
            skills=tuple(
                SkillSpec(name=sk["name"], primitive=sk["primitive"],
                          parameters={k: _param_from_json(v)
                                      for k, v in sk.get("parameters", {}).items()},
                          note=sk.get("note", "") or "")
                for sk in s.get("skills", ())
            ),
            knowledge=tuple(s.get("knowledge", ())),
            states={k: _state_from_dict(v) for k, v in s.get("states", {}).items()},
        )
        for s in d.get("subObjList", ())
    )
    mgr_d = d["managerObj"]
    policy = tuple(
        PolicyRule(
            skill=r["skill"],
            when=None if r.get("when") is None else Condition(
                path=r["when"]["path"], op=r["when"]["op"],
                value=_condition_value_from_json(r["when"]["value"])),
        )
        for r in mgr_d.get("policy", ())
    )
    manager = ManagerObject(
        currentState=mgr_d["currentState"],
        stateSet=tuple(mgr_d["stateSet"]),
        policy=policy,
        rewardAccumulator=float(mgr_d.get("rewardAccumulator", 0.0)),
    )
    steps = tuple(
        StepObject(index=int(st["index"]), tick=int(st["tick"]), actor=st["actor"],
                   skill=st["skill"], resultingState=st["resultingState"],
                   note=st.get("note", ""))
        for st in d.get("stepObjList", ())
    )
    return ALO(name=d["name"], mainObj=d["mainObj"], subObjList=subs,
               managerObj=manager, stepObjList=steps,
               provenance=d.get("provenance", "llm-generated"))


def _condition_value_from_json(value: Any):
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)):
        return float(value)
    return str(value)
