"""Generators for valid ALOs and mutated documents.

Two flavors: hypothesis strategies for property tests, and a plain seeded
``random_alo`` for bulk round-trip checks where shrinking is not needed.
Generated objects stay inside the canonical grammar's value space (no
newlines in free text, labels that are not boolean literals, and so on) so
serialize -> parse is expected to be the identity.
"""

from __future__ import annotations

import random
from typing import Optional

from hypothesis import strategies as st

from alos.model import (
    ALO,
    Condition,
    ManagerObject,
    PolicyRule,
    REQUIRED_PARAMETERS,
    SKILL_PRIMITIVES,
    SkillSpec,
    StateVariable,
    StepObject,
    SubObject,
)

WORDS = (
    "amber", "basil", "cedar", "delta", "ember", "fjord", "gamma", "hazel",
    "iris", "junco", "koral", "lumen", "maple", "nimbus", "onyx", "pico",
    "quill", "raven", "sable", "tansy", "umber", "vesta", "wren", "xenon",
    "yarrow", "zephyr",
)
UNITS = ("", "pct", "kg", "m", "units", "s")
_FACT_TAILS = ("keeps steady habits", "notices nearby motion",
               "remembers its last path", "waits for a clear signal")


def _word(rng: random.Random) -> str:
    return rng.choice(WORDS)


def _ident(rng: random.Random, max_words: int = 2) -> str:
    n = rng.randint(1, max_words)
    sep = rng.choice((" ", "-", "_"))
    return sep.join(_word(rng) for _ in range(n))


def _scalar(rng: random.Random) -> float:
    if rng.random() < 0.4:
        return float(rng.randint(-100, 100))
    return rng.uniform(-1000.0, 1000.0)


def random_state(rng: random.Random, name: str) -> StateVariable:
    kind = rng.choice(("scalar", "boolean", "label", "vector3"))
    if kind == "scalar":
        value = _scalar(rng)
        if rng.random() < 0.7:
            lo = value - abs(_scalar(rng)) - 1.0
            hi = value + abs(_scalar(rng)) + 1.0
            domain = (lo, hi)
        else:
            domain = None
        return StateVariable(name, "scalar", value, domain, rng.choice(UNITS))
    if kind == "boolean":
        return StateVariable(name, "boolean", rng.random() < 0.5)
    if kind == "label":
        pool = rng.sample(WORDS, rng.randint(1, 4))
        return StateVariable(name, "label", rng.choice(pool), tuple(pool))
    vec = tuple(_scalar(rng) for _ in range(3))
    return StateVariable(name, "vector3", vec)


def random_skill(rng: random.Random, name: str) -> SkillSpec:
    primitive = rng.choice(SKILL_PRIMITIVES)
    params: dict = {}
    for req in REQUIRED_PARAMETERS[primitive]:
        params[req] = _word(rng) if req == "signal" else rng.uniform(0.5, 50.0)
    if rng.random() < 0.3:
        params[_word(rng)] = rng.choice((_scalar(rng), _word(rng)))
    note = ""
    if primitive == "idle" and rng.random() < 0.2:
        note = _word(rng)  # a downgraded novel verb
    return SkillSpec(name=name, primitive=primitive, parameters=params, note=note)


def random_sub(rng: random.Random, name: str) -> SubObject:
    skill_names = rng.sample(WORDS, rng.randint(0, 3))
    state_names = rng.sample(WORDS, rng.randint(0, 3))
    facts = tuple(f"{_word(rng)} {rng.choice(_FACT_TAILS)}"
                  for _ in range(rng.randint(0, 3)))
    return SubObject(
        name=name,
        skills=tuple(random_skill(rng, n) for n in skill_names),
        knowledge=facts,
        states={n: random_state(rng, n) for n in state_names},
    )


def _random_policy(rng: random.Random, subs: tuple[SubObject, ...]) -> tuple[PolicyRule, ...]:
    skill_names = [s.name for sub in subs for s in sub.skills]
    state_paths = [(f"{sub.name}.{n}", var) for sub in subs
                   for n, var in sub.states.items()]
    rules = []
    for _ in range(rng.randint(0, 3)):
        if not skill_names:
            break
        target = rng.choice(skill_names)
        if state_paths and rng.random() < 0.7:
            path, var = rng.choice(state_paths)
            if var.kind == "scalar":
                cond = Condition(path, rng.choice(("<", "<=", ">", ">=", "==", "!=")),
                                 _scalar(rng))
            elif var.kind == "boolean":
                cond = Condition(path, rng.choice(("==", "!=")), rng.random() < 0.5)
            elif var.kind == "label":
                cond = Condition(path, rng.choice(("==", "!=")), _word(rng))
            else:
                cond = Condition("sensors.distanceToNearest", "<", abs(_scalar(rng)))
            rules.append(PolicyRule(target, cond))
        else:
            rules.append(PolicyRule(target))
    return tuple(rules)


def random_steps(rng: random.Random) -> tuple[StepObject, ...]:
    steps = []
    index = 0
    tick = 0
    for _ in range(rng.randint(0, 4)):
        index += rng.randint(1, 3)
        tick += rng.randint(0, 2)
        steps.append(StepObject(
            index=index, tick=tick, actor=f"{_word(rng)}#{rng.randint(0, 3)}",
            skill=_word(rng), resultingState=_word(rng),
            note=rng.choice(("", "emit ping", "clamped at boundary"))))
    return tuple(steps)


def random_alo(rng: random.Random, name: Optional[str] = None) -> ALO:
    """A structurally valid ALO; validate() is expected to pass."""
    name = name or _ident(rng)
    sub_names = rng.sample(WORDS, rng.randint(0, 3))
    subs = tuple(random_sub(rng, n) for n in sub_names)
    state_set = tuple(dict.fromkeys(
        [_word(rng) for _ in range(rng.randint(1, 3))]))
    manager = ManagerObject(
        currentState=rng.choice(state_set),
        stateSet=state_set,
        policy=_random_policy(rng, subs),
        rewardAccumulator=_scalar(rng),
    )
    return ALO(name=name, mainObj=name, subObjList=subs, managerObj=manager,
               stepObjList=random_steps(rng),
               provenance=rng.choice(("authored", "llm-generated", "derived")))


alos = st.builds(lambda seed: random_alo(random.Random(seed)),
                 st.integers(min_value=0, max_value=2**48))


# --- document mutation (for repair testing) -----------------------------------------

BENIGN = ("dup_key", "heading_level", "prose", "boolean_spelling", "blank")
ALL_MUTATIONS = BENIGN + ("dangling_fence",)


def mutate_document(doc: str, rng: random.Random, kinds=ALL_MUTATIONS,
                    n_mutations: int = 3) -> str:
    """Apply grammar-breaking edits that the repair rules are meant to absorb."""
    lines = doc.split("\n")
    for _ in range(n_mutations):
        kind = rng.choice(kinds)
        if kind == "dup_key":
            keys = [i for i, ln in enumerate(lines)
                    if ln.startswith("- ") and ln.rstrip().endswith(":")]
            if keys:
                i = rng.choice(keys)
                lines.insert(i + 1, lines[i])
        elif kind == "heading_level":
            heads = [i for i, ln in enumerate(lines) if ln.startswith("#")]
            if heads:
                i = rng.choice(heads)
                body = lines[i].lstrip("#").strip()
                lines[i] = "#" * rng.randint(1, 6) + " " + body
        elif kind == "prose":
            i = rng.randrange(len(lines) + 1)
            lines.insert(i, rng.choice((
                "Sure! Here is the object you asked for.",
                "Let me know if you need adjustments.",
                "This follows every step in order.")))
        elif kind == "boolean_spelling":
            for i, ln in enumerate(lines):
                if ": boolean = true" in ln:
                    lines[i] = ln.replace("= true", "= yes")
                    break
                if ": boolean = false" in ln:
                    lines[i] = ln.replace("= false", "= no")
                    break
        elif kind == "blank":
            lines.insert(rng.randrange(len(lines) + 1), "")
        elif kind == "dangling_fence":
            lines.append("```js")
            lines.append("console.log('leftover');")
    return "\n".join(lines)
