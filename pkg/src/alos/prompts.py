"""Prompt rendering and parameter classification.

Prompt bodies live as plain-text resources under ``resources/prompts`` and
use ``{slot}`` placeholders; the visual/performance keyword lexicon lives
under ``resources/lexicon`` so scenario packs can extend either without
code changes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Optional

from .errors import EmptyInputError, UnknownNameError
from .model import ALO
from .parser import format_number

_SLOT_RE = re.compile(r"\{([a-z_]+)\}")

# Template ids map to resource file stems (dashes become underscores).
TEMPLATE_IDS = (
    "system-markdown",
    "system-codegen",
    "create",
    "interact",
    "interact-bare",
    "brainstorm",
    "tableize",
    "image",
)

DEFAULT_IMAGE_SUFFIX = "--v 5"


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    slots: tuple[str, ...]
    body: str


@lru_cache(maxsize=None)
def get_template(template_id: str) -> PromptTemplate:
    if template_id not in TEMPLATE_IDS:
        raise KeyError(f"unknown template id {template_id!r}")
    stem = template_id.replace("-", "_")
    body = (resources.files("alos") / "resources" / "prompts" / f"{stem}.txt") \
        .read_text(encoding="utf-8").rstrip("\n")
    slots = tuple(dict.fromkeys(_SLOT_RE.findall(body)))
    return PromptTemplate(id=template_id, slots=slots, body=body)


def render(template: PromptTemplate, **values: str) -> str:
    missing = [s for s in template.slots if s not in values]
    if missing:
        raise KeyError(f"unbound slots {missing} for template {template.id}")
    out = _SLOT_RE.sub(lambda m: values[m.group(1)], template.body)
    if _SLOT_RE.search(out):
        raise ValueError(f"residual slot marker after rendering {template.id}")
    return out


def system_prompt(variant: str) -> str:
    """The verbatim system prompt; 'markdown' builds objects, 'codegen' scripts."""
    if variant not in ("markdown", "codegen"):
        raise KeyError(f"unknown system prompt variant {variant!r}")
    return get_template(f"system-{variant}").body


def creation_prompt(input_name: str) -> str:
    if not input_name:
        raise EmptyInputError("creation prompt needs a non-empty name")
    return render(get_template("create"), input=input_name)


def interaction_prompt(reg, a: str, b: str, context: Optional[str] = None) -> str:
    """The meets-pattern user prompt for two registered ALOs."""
    for name in (a, b):
        if name not in reg:
            raise UnknownNameError(f"no ALO named {name!r} in registry")
    if context:
        return render(get_template("interact"), a=a, b=b, context=context)
    return render(get_template("interact-bare"), a=a, b=b)


def brainstorm_sequence(name: str) -> list[str]:
    """The two-step brainstorm-then-tableize user prompt sequence."""
    if not name:
        raise EmptyInputError("brainstorm sequence needs a non-empty name")
    return [
        render(get_template("brainstorm"), input=name),
        render(get_template("tableize"), input=name),
    ]


def _value_text(var) -> str:
    if var.kind == "scalar":
        return format_number(var.value)
    if var.kind == "boolean":
        return "true" if var.value else "false"
    if var.kind == "vector3":
        x, y, z = var.value
        return f"({format_number(x)}, {format_number(y)}, {format_number(z)})"
    return str(var.value)


def image_prompt(alo: ALO, suffix: str = DEFAULT_IMAGE_SUFFIX) -> str:
    """Flatten states into declarative prose for an image generator.

    Sub-objects keep list order, state names are taken lexicographically,
    and the text ends with a single space before the suffix.
    """
    sentence = get_template("image")
    parts = [f"{alo.name}."]
    for sub in alo.subObjList:
        for state_name in sorted(sub.states):
            parts.append(render(sentence, name=state_name,
                                value=_value_text(sub.states[state_name])))
    return " ".join(parts) + " " + suffix


# --- visual vs performance classification ------------------------------------


@dataclass(frozen=True)
class ParameterClass:
    label: str  # visual | performance | other
    matchedKeyword: str = ""


@dataclass(frozen=True)
class ClassificationReport:
    classes: dict  # "<sub>.<state>" -> ParameterClass
    visual_coverage: Optional[float]  # None when there are no states at all


@lru_cache(maxsize=None)
def _lexicon(kind: str) -> tuple[str, ...]:
    text = (resources.files("alos") / "resources" / "lexicon" / f"{kind}.txt") \
        .read_text(encoding="utf-8")
    return tuple(w.strip().lower() for w in text.splitlines() if w.strip())


_TOKEN_RE = re.compile(r"[A-Z]?[a-z]+|[A-Z]+(?![a-z])|[0-9]+")


def _tokens(name: str) -> set[str]:
    return {t.lower() for t in _TOKEN_RE.findall(name)}


def classify_parameters(alo: ALO) -> ClassificationReport:
    """Label every state path via the lexicon; visual wins over performance."""
    classes: dict[str, ParameterClass] = {}
    n_visual = 0
    total = 0
    for sub in alo.subObjList:
        for state_name in sorted(sub.states):
            path = f"{sub.name}.{state_name}"
            toks = _tokens(state_name)
            cls = ParameterClass("other")
            for keyword in _lexicon("visual"):
                if keyword in toks:
                    cls = ParameterClass("visual", keyword)
                    break
            else:
                for keyword in _lexicon("performance"):
                    if keyword in toks:
                        cls = ParameterClass("performance", keyword)
                        break
            classes[path] = cls
            total += 1
            if cls.label == "visual":
                n_visual += 1
    coverage = (n_visual / total) if total else None
    return ClassificationReport(classes=classes, visual_coverage=coverage)
