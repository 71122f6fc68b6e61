"""Ready-made ALO objects used by the mock backend and the test suite.

The cat and roomba are the reference pair: the cat stalks the nearest
entity, the roomba cleans until something comes too close and then flees
faster than the cat can chase, so it can escape. Any other name gets the
generic template with the name woven into its knowledge.
"""

from __future__ import annotations

from .model import (
    ALO,
    Condition,
    ManagerObject,
    PolicyRule,
    SkillSpec,
    StateVariable,
    SubObject,
)

MEET_SEPARATOR = " meets "

# Reference placement for two-entity encounter scenarios: close enough that
# the chase reaches the trigger radius well inside a 300-tick run.
DEFAULT_POSITIONS = ((40.0, 0.0, 50.0), (60.0, 0.0, 50.0))


def cat_alo() -> ALO:
    body = SubObject(
        name="body",
        skills=(
            SkillSpec("hunt", "seek", {"radius": 200.0, "speed": 10.0}),
            SkillSpec("jump", "jump", {"speed": 5.0}),
            SkillSpec("meow", "emit", {"signal": "meow"}),
            SkillSpec("rest", "idle"),
        ),
        knowledge=(
            "a cat is an agile domestic animal",
            "cats chase small moving objects",
            "cats nap when nothing moves",
        ),
        states={
            "energy": StateVariable("energy", "scalar", 80.0, (0.0, 100.0), "pct"),
            "mood": StateVariable("mood", "label", "curious",
                                  ("curious", "sleepy", "playful")),
        },
    )
    manager = ManagerObject(
        currentState="rest",
        stateSet=("rest", "hunt", "jump", "meow"),
        policy=(
            PolicyRule("hunt", Condition("body.energy", ">", 20.0)),
            PolicyRule("rest"),
        ),
    )
    return ALO(name="cat", mainObj="cat", subObjList=(body,), managerObj=manager)


def roomba_alo() -> ALO:
    chassis = SubObject(
        name="chassis",
        skills=(
            SkillSpec("clean", "move", {"speed": 6.0}),
            SkillSpec("rotate", "rotate", {"rate": 1.5}),
            SkillSpec("flee", "flee", {"radius": 10.0, "speed": 12.0}),
            SkillSpec("dock", "idle"),
        ),
        knowledge=(
            "a roomba is a robot vacuum cleaner",
            "the roomba avoids obstacles while cleaning",
        ),
        states={
            "battery": StateVariable("battery", "scalar", 90.0, (0.0, 100.0), "pct"),
            "mode": StateVariable("mode", "label", "cleaning",
                                  ("cleaning", "docked")),
        },
    )
    manager = ManagerObject(
        currentState="dock",
        stateSet=("dock", "clean", "rotate", "flee"),
        policy=(
            PolicyRule("clean", Condition("chassis.battery", ">", 10.0)),
            PolicyRule("dock"),
        ),
    )
    return ALO(name="roomba", mainObj="roomba", subObjList=(chassis,), managerObj=manager)


def pair_alo(a: str, b: str, trigger_radius: float = 10.0,
             response_skill: str = "flee") -> ALO:
    """The '<a> meets <b>' object: observes the pair and names who reacts how.

    Its policy target ``<b>.<skill>`` is a cross-ALO reference that the
    registry's birth hook resolves, and the simulator turns it into an
    interaction rule.
    """
    name = f"{a}{MEET_SEPARATOR}{b}"
    encounter = SubObject(
        name="encounter",
        skills=(SkillSpec("observe", "idle"),),
        knowledge=(f"{a} and {b} share one bounded world",),
        states={
            "triggerRadius": StateVariable("triggerRadius", "scalar",
                                           trigger_radius, (0.0, 1000.0), "units"),
        },
    )
    manager = ManagerObject(
        currentState="watching",
        stateSet=("watching",),
        policy=(PolicyRule(f"{b}.{response_skill}"),),
    )
    return ALO(name=name, mainObj=name, subObjList=(encounter,), managerObj=manager)


def generic_alo(name: str) -> ALO:
    core = SubObject(
        name="core",
        skills=(
            SkillSpec("roam", "move", {"speed": 5.0}),
            SkillSpec("ping", "emit", {"signal": "ping"}),
            SkillSpec("rest", "idle"),
        ),
        knowledge=(
            f"{name} is an abstract language object",
            f"{name} interacts with its world through named skills",
        ),
        states={
            "energy": StateVariable("energy", "scalar", 100.0, (0.0, 200.0), "units"),
            "active": StateVariable("active", "boolean", True),
        },
    )
    manager = ManagerObject(
        currentState="rest",
        stateSet=("rest", "roam"),
        policy=(
            PolicyRule("roam", Condition("core.energy", ">", 0.0)),
            PolicyRule("rest"),
        ),
    )
    return ALO(name=name, mainObj=name, subObjList=(core,), managerObj=manager)


def alo_for(name: str) -> ALO:
    if name == "cat":
        return cat_alo()
    if name == "roomba":
        return roomba_alo()
    if MEET_SEPARATOR in name:
        a, _, b = name.partition(MEET_SEPARATOR)
        return pair_alo(a, b)
    return generic_alo(name)
