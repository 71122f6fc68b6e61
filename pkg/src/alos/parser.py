"""Parse and serialize the canonical ALO markdown dialect.

The grammar is line-oriented (documented with ABNF in docs/alo-format.md):

    # ALO: <name>
    - provenance: <authored|llm-generated|derived>
    ## subObjList
    ### <sub-object name>
    - skills:
      - <skill>: <verb> (<k>=<v>, ...)
    - knowledge:
      - <fact>
    - states:
      - <name>: scalar = <num> in [<lo>, <hi>] unit <unit>
      - <name>: boolean = true
      - <name>: label = <value> in {<a>, <b>}
      - <name>: vector3 = (<x>, <y>, <z>)
    ## managerObj
    - currentState: <label>
    - stateSet: <a>, <b>
    - policy:
      - when <sub>.<state> <op> <value> -> <skill>
      - always -> <skill>
    - reward: <num>
    ## stepObjList
    - index=<i> tick=<t> actor=<id> skill=<id> state=<label> note=<text>

Parsing is tolerant: ``repair`` runs first and applies a bounded rule set
(R1 close unterminated fence, R2 renormalize heading depth, R3 drop
duplicate keys keeping the first, R4 coerce yes/no/true/false spellings,
R5 strip prose outside the grammar). Unknown skill verbs downgrade to the
idle primitive with the original verb kept as the skill note.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import NoTableFoundError, ParseError, RaggedRowError, ValidationFailedError
from .model import (
    ALO,
    Condition,
    ManagerObject,
    PolicyRule,
    SKILL_PRIMITIVES,
    SkillSpec,
    StateVariable,
    StepObject,
    SubObject,
    validate,
)

PROVENANCE_DEFAULT = "llm-generated"

_SECTION_NAMES = ("subObjList", "managerObj", "stepObjList")
_SUB_KEYS = ("skills", "knowledge", "states")
_MANAGER_KEYS = ("currentState", "stateSet", "policy", "reward")


def format_number(x: float) -> str:
    """Round-trip-exact float text; integral values drop the '.0'."""
    if isinstance(x, int):
        return str(x)
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def _format_condition_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_number(value)
    return str(value)


def _parse_condition_value(text: str):
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return float(text)
    except ValueError:
        return text


def _format_param_value(value) -> str:
    if isinstance(value, float):
        return format_number(value)
    return str(value)


# --- serialization ------------------------------------------------------------


def serialize(alo: ALO) -> str:
    """Canonical markdown for an ALO; states are written name-sorted."""
    lines: list[str] = [f"# ALO: {alo.name}", f"- provenance: {alo.provenance}"]
    lines.append("## subObjList")
    for sub in alo.subObjList:
        lines.append(f"### {sub.name}")
        if sub.skills:
            lines.append("- skills:")
            for sk in sub.skills:
                verb = sk.note if sk.note else sk.primitive
                head = f"  - {sk.name}: {verb}"
                if sk.parameters:
                    params = ", ".join(
                        f"{k}={_format_param_value(v)}"
                        for k, v in sorted(sk.parameters.items()))
                    head += f" ({params})"
                lines.append(head)
        if sub.knowledge:
            lines.append("- knowledge:")
            for fact in sub.knowledge:
                lines.append(f"  - {fact}")
        if sub.states:
            lines.append("- states:")
            for name in sorted(sub.states):
                lines.append(f"  - {_state_line(sub.states[name])}")
    lines.append("## managerObj")
    mgr = alo.managerObj
    lines.append(f"- currentState: {mgr.currentState}")
    lines.append(f"- stateSet: {', '.join(mgr.stateSet)}")
    if mgr.policy:
        lines.append("- policy:")
        for rule in mgr.policy:
            if rule.when is None:
                lines.append(f"  - always -> {rule.skill}")
            else:
                c = rule.when
                lines.append(
                    f"  - when {c.path} {c.op} {_format_condition_value(c.value)}"
                    f" -> {rule.skill}")
    lines.append(f"- reward: {format_number(mgr.rewardAccumulator)}")
    lines.append("## stepObjList")
    for st in alo.stepObjList:
        lines.append(
            f"- index={st.index} tick={st.tick} actor={st.actor}"
            f" skill={st.skill} state={st.resultingState} note={st.note}")
    return "\n".join(lines) + "\n"


def _state_line(var: StateVariable) -> str:
    if var.kind == "scalar":
        text = f"{var.name}: scalar = {format_number(var.value)}"
        if var.domain is not None:
            lo, hi = var.domain
            text += f" in [{format_number(lo)}, {format_number(hi)}]"
        if var.unit:
            text += f" unit {var.unit}"
        return text
    if var.kind == "boolean":
        return f"{var.name}: boolean = {'true' if var.value else 'false'}"
    if var.kind == "label":
        text = f"{var.name}: label = {var.value}"
        if var.domain:
            text += f" in {{{', '.join(var.domain)}}}"
        return text
    x, y, z = var.value
    return (f"{var.name}: vector3 = ({format_number(x)}, "
            f"{format_number(y)}, {format_number(z)})")


# --- repair -------------------------------------------------------------------


@dataclass(frozen=True)
class RepairResult:
    text: str
    applied: tuple[str, ...]


_FENCE_RE = re.compile(r"^```")
_HEADING_RE = re.compile(r"^(#{1,6})\s+(.*?)\s*$")
_ALO_HEADING_RE = re.compile(r"^#{1,6}\s*ALO:\s*(.*?)\s*$")
_BOOL_STATE_RE = re.compile(r"(:\s*boolean\s*=\s*)(yes|no|true|false)\b", re.IGNORECASE)
_BOOL_COND_RE = re.compile(r"(\s(?:==|!=)\s)(yes|no|true|false)(?=\s->\s)", re.IGNORECASE)
_BOOL_CANON = {"yes": "true", "no": "false", "true": "true", "false": "false"}


def repair(text: str) -> RepairResult:
    """Apply the bounded repair rules; idempotent by construction."""
    applied: set[str] = set()
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    lines = text.split("\n")

    # R1: close an unterminated fence so fenced regions are well defined.
    fence_count = sum(1 for ln in lines if _FENCE_RE.match(ln.strip()))
    if fence_count % 2 == 1:
        if lines and lines[-1] == "":
            lines.insert(len(lines) - 1, "```")
        else:
            lines.append("```")
        applied.add("R1")

    in_fence = [False] * len(lines)
    open_ = False
    for i, ln in enumerate(lines):
        if _FENCE_RE.match(ln.strip()):
            in_fence[i] = True  # fence markers themselves stay untouched
            open_ = not open_
        else:
            in_fence[i] = open_

    # R2 pass A: pin the known headings to their grammar depth.
    for i, ln in enumerate(lines):
        if in_fence[i]:
            continue
        m = _ALO_HEADING_RE.match(ln)
        if m:
            fixed = f"# ALO: {m.group(1)}"
            if fixed != ln:
                lines[i] = fixed
                applied.add("R2")
            continue
        m = _HEADING_RE.match(ln)
        if m and m.group(2) in _SECTION_NAMES:
            fixed = f"## {m.group(2)}"
            if fixed != ln:
                lines[i] = fixed
                applied.add("R2")

    # R2 pass B: any other heading inside subObjList is a sub-object heading.
    section = None
    for i, ln in enumerate(lines):
        if in_fence[i]:
            continue
        m = _HEADING_RE.match(ln)
        if not m:
            continue
        if m.group(2) in _SECTION_NAMES:
            section = m.group(2)
        elif _ALO_HEADING_RE.match(ln):
            section = None
        elif section == "subObjList":
            fixed = f"### {m.group(2)}"
            if fixed != ln:
                lines[i] = fixed
                applied.add("R2")

    # R3: drop duplicated key lines, keeping the first occurrence per scope.
    out: list[str] = []
    out_fence: list[bool] = []
    seen_keys: set[str] = set()
    for i, ln in enumerate(lines):
        if not in_fence[i]:
            if _HEADING_RE.match(ln):
                seen_keys = set()  # every heading opens a fresh key scope
            key = _key_of(ln)
            if key is not None:
                if key in seen_keys:
                    applied.add("R3")
                    continue
                seen_keys.add(key)
        out.append(ln)
        out_fence.append(in_fence[i])
    lines, in_fence = out, out_fence

    # R4: canonicalize boolean spellings.
    for i, ln in enumerate(lines):
        if in_fence[i]:
            continue
        fixed = _BOOL_STATE_RE.sub(lambda m: m.group(1) + _BOOL_CANON[m.group(2).lower()], ln)
        fixed = _BOOL_COND_RE.sub(lambda m: m.group(1) + _BOOL_CANON[m.group(2).lower()], fixed)
        if fixed != ln:
            lines[i] = fixed
            applied.add("R4")

    # R5: strip prose, i.e. non-blank lines that are neither headings nor bullets.
    kept: list[str] = []
    for i, ln in enumerate(lines):
        if in_fence[i] or _FENCE_RE.match(ln.strip()):
            kept.append(ln)
            continue
        stripped = ln.strip()
        if stripped == "" or stripped.startswith("#") or _is_bullet(ln):
            kept.append(ln)
        else:
            applied.add("R5")
    return RepairResult("\n".join(kept), tuple(sorted(applied)))


def _key_of(line: str) -> str | None:
    """Scope-qualified key for R3 deduplication, or None for non-key lines."""
    if not line.startswith("- "):
        return None
    body = line[2:]
    name, sep, _ = body.partition(":")
    if sep and name in _SUB_KEYS + _MANAGER_KEYS + ("provenance",):
        return name
    return None


def _is_bullet(line: str) -> bool:
    return bool(re.match(r"^\s*- ", line)) or line.strip() == "-"


# --- parsing ------------------------------------------------------------------


_SKILL_ITEM_RE = re.compile(
    r"^(?P<name>[^:]+?):\s*(?P<verb>[A-Za-z0-9_\-]+)"
    r"(?:\s*\((?P<params>[^)]*)\))?$")
_STATE_ITEM_RE = re.compile(
    r"^(?P<name>[^:]+?):\s*(?P<kind>scalar|boolean|label|vector3)\s*=\s*(?P<rest>.*)$")
_SCALAR_REST_RE = re.compile(
    r"^(?P<val>[^\s]+)(?:\s+in\s+\[(?P<lo>[^,\]]+),\s*(?P<hi>[^\]]+)\])?"
    r"(?:\s+unit\s+(?P<unit>.*))?$")
_LABEL_REST_RE = re.compile(r"^(?P<val>.+?)(?:\s+in\s+\{(?P<labels>[^}]*)\})?$")
_VECTOR_REST_RE = re.compile(
    r"^\(\s*(?P<x>[^,]+),\s*(?P<y>[^,]+),\s*(?P<z>[^)]+)\)$")
_POLICY_WHEN_RE = re.compile(
    r"^when\s+(?P<path>\S+)\s+(?P<op>==|!=|<=|>=|<|>)\s+(?P<value>.+?)\s+->\s+(?P<skill>.+)$")
_POLICY_ALWAYS_RE = re.compile(r"^always\s+->\s+(?P<skill>.+)$")
_STEP_RE = re.compile(
    r"^index=(?P<index>\d+) tick=(?P<tick>-?\d+) actor=(?P<actor>.+?)"
    r" skill=(?P<skill>.+?) state=(?P<state>.+?) note=(?P<note>.*)$")


class _Doc:
    """Cursor over significant (non-blank) lines with original line numbers."""

    def __init__(self, text: str):
        self.rows = [(i + 1, ln) for i, ln in enumerate(text.split("\n")) if ln.strip()]
        self.pos = 0

    def peek(self):
        if self.pos < len(self.rows):
            return self.rows[self.pos]
        return (self.rows[-1][0] + 1 if self.rows else 1, None)

    def take(self):
        row = self.peek()
        self.pos += 1
        return row


def parse_alo_markdown(text: str) -> ALO:
    """Parse one ALO document (repairing first); the result always validates."""
    repaired = repair(text).text
    doc = _Doc(repaired)

    lineno, line = doc.take()
    if line is None or not line.startswith("# ALO:"):
        raise ParseError(lineno, '"# ALO:"')
    name = line[len("# ALO:"):].strip()
    if not name:
        raise ParseError(lineno, "a non-empty ALO name")

    provenance = PROVENANCE_DEFAULT
    lineno, line = doc.peek()
    if line is not None and line.startswith("- provenance:"):
        doc.take()
        provenance = line[len("- provenance:"):].strip()

    lineno, line = doc.take()
    if line != "## subObjList":
        raise ParseError(lineno, '"## subObjList"')
    subs = _parse_subobjects(doc)

    lineno, line = doc.take()
    if line != "## managerObj":
        raise ParseError(lineno, '"## managerObj"')
    manager = _parse_manager(doc, lineno)

    lineno, line = doc.take()
    if line != "## stepObjList":
        raise ParseError(lineno, '"## stepObjList"')
    steps = _parse_steps(doc)

    lineno, line = doc.peek()
    if line is not None:
        raise ParseError(lineno, "end of document")

    alo = ALO(name=name, mainObj=name, subObjList=subs, managerObj=manager,
              stepObjList=steps, provenance=provenance)
    report = validate(alo)
    if not report.ok:
        raise ValidationFailedError(report)
    return alo


def _parse_subobjects(doc: _Doc) -> tuple[SubObject, ...]:
    subs: list[SubObject] = []
    while True:
        lineno, line = doc.peek()
        if line is None or line.startswith("## "):
            return tuple(subs)
        if not line.startswith("### "):
            raise ParseError(lineno, '"### <sub-object>" or "## managerObj"')
        doc.take()
        subs.append(_parse_one_sub(doc, line[4:].strip()))


def _parse_one_sub(doc: _Doc, name: str) -> SubObject:
    skills: list[SkillSpec] = []
    knowledge: list[str] = []
    states: dict[str, StateVariable] = {}
    mode = None
    while True:
        lineno, line = doc.peek()
        if line is None or line.startswith("## ") or line.startswith("### "):
            return SubObject(name=name, skills=tuple(skills),
                             knowledge=tuple(knowledge), states=states)
        doc.take()
        if line.startswith("- "):
            key = line[2:].rstrip(":").strip()
            if key not in _SUB_KEYS:
                raise ParseError(lineno, '"- skills:", "- knowledge:" or "- states:"')
            mode = key
            continue
        item = line.strip()
        if not item.startswith("- "):
            raise ParseError(lineno, "a list item")
        item = item[2:].strip()
        if mode == "skills":
            skills.append(_parse_skill_item(item, lineno))
        elif mode == "knowledge":
            knowledge.append(item)
        elif mode == "states":
            var = _parse_state_item(item, lineno)
            states[var.name] = var
        else:
            raise ParseError(lineno, "a key line before list items")


def _parse_skill_item(item: str, lineno: int) -> SkillSpec:
    m = _SKILL_ITEM_RE.match(item)
    if not m:
        raise ParseError(lineno, '"<skill>: <verb> (k=v, ...)"')
    params: dict[str, object] = {}
    if m.group("params"):
        for chunk in m.group("params").split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            key, sep, val = chunk.partition("=")
            if not sep:
                raise ParseError(lineno, '"key=value" skill parameters')
            val = val.strip()
            try:
                params[key.strip()] = float(val)
            except ValueError:
                params[key.strip()] = val
    verb = m.group("verb")
    if verb in SKILL_PRIMITIVES:
        return SkillSpec(name=m.group("name").strip(), primitive=verb, parameters=params)
    # Novel verbs degrade gracefully: run as idle, remember what was asked.
    return SkillSpec(name=m.group("name").strip(), primitive="idle",
                     parameters=params, note=verb)


def _parse_state_item(item: str, lineno: int) -> StateVariable:
    m = _STATE_ITEM_RE.match(item)
    if not m:
        raise ParseError(lineno, '"<state>: <kind> = <value>"')
    name = m.group("name").strip()
    kind = m.group("kind")
    rest = m.group("rest").strip()
    if kind == "scalar":
        s = _SCALAR_REST_RE.match(rest)
        if not s:
            raise ParseError(lineno, "a scalar value")
        try:
            value = float(s.group("val"))
            domain = None
            if s.group("lo") is not None:
                domain = (float(s.group("lo")), float(s.group("hi")))
        except ValueError:
            raise ParseError(lineno, "numeric scalar value and domain") from None
        return StateVariable(name=name, kind="scalar", value=value,
                             domain=domain, unit=(s.group("unit") or "").strip())
    if kind == "boolean":
        if rest not in ("true", "false"):
            raise ParseError(lineno, '"true" or "false"')
        return StateVariable(name=name, kind="boolean", value=rest == "true")
    if kind == "label":
        s = _LABEL_REST_RE.match(rest)
        if not s:
            raise ParseError(lineno, "a label value")
        labels = tuple(
            x.strip() for x in (s.group("labels") or "").split(",") if x.strip())
        return StateVariable(name=name, kind="label", value=s.group("val").strip(),
                             domain=labels)
    s = _VECTOR_REST_RE.match(rest)
    if not s:
        raise ParseError(lineno, '"(x, y, z)"')
    try:
        value = (float(s.group("x")), float(s.group("y")), float(s.group("z")))
    except ValueError:
        raise ParseError(lineno, "numeric vector components") from None
    return StateVariable(name=name, kind="vector3", value=value)


def _parse_manager(doc: _Doc, header_lineno: int) -> ManagerObject:
    current = None
    state_set: tuple[str, ...] = ()
    policy: list[PolicyRule] = []
    reward = 0.0
    mode = None
    saw_state_set = False
    while True:
        lineno, line = doc.peek()
        if line is None or line.startswith("## "):
            if current is None:
                raise ParseError(header_lineno, '"- currentState:" in managerObj')
            if not saw_state_set:
                raise ParseError(header_lineno, '"- stateSet:" in managerObj')
            return ManagerObject(currentState=current, stateSet=state_set,
                                 policy=tuple(policy), rewardAccumulator=reward)
        doc.take()
        if line.startswith("- "):
            key, sep, value = line[2:].partition(":")
            key = key.strip()
            if key not in _MANAGER_KEYS or not sep:
                raise ParseError(lineno, "a managerObj key line")
            value = value.strip()
            if key == "currentState":
                current = value
                mode = None
            elif key == "stateSet":
                state_set = tuple(x.strip() for x in value.split(",") if x.strip())
                saw_state_set = True
                mode = None
            elif key == "reward":
                try:
                    reward = float(value)
                except ValueError:
                    raise ParseError(lineno, "a numeric reward") from None
                mode = None
            else:
                mode = "policy"
            continue
        item = line.strip()
        if not (mode == "policy" and item.startswith("- ")):
            raise ParseError(lineno, "a policy item under '- policy:'")
        policy.append(_parse_policy_item(item[2:].strip(), lineno))


def _parse_policy_item(item: str, lineno: int) -> PolicyRule:
    m = _POLICY_ALWAYS_RE.match(item)
    if m:
        return PolicyRule(skill=m.group("skill").strip())
    m = _POLICY_WHEN_RE.match(item)
    if not m:
        raise ParseError(lineno, '"when <path> <op> <value> -> <skill>" or "always -> <skill>"')
    return PolicyRule(
        skill=m.group("skill").strip(),
        when=Condition(path=m.group("path"), op=m.group("op"),
                       value=_parse_condition_value(m.group("value").strip())))


def _parse_steps(doc: _Doc) -> tuple[StepObject, ...]:
    steps: list[StepObject] = []
    while True:
        lineno, line = doc.peek()
        if line is None or line.startswith("## ") or line.startswith("# "):
            return tuple(steps)
        doc.take()
        if not line.startswith("- "):
            raise ParseError(lineno, "a step entry")
        m = _STEP_RE.match(line[2:].strip())
        if not m:
            raise ParseError(lineno, '"index=<i> tick=<t> actor=... skill=... state=... note=..."')
        steps.append(StepObject(
            index=int(m.group("index")), tick=int(m.group("tick")),
            actor=m.group("actor"), skill=m.group("skill"),
            resultingState=m.group("state"), note=m.group("note")))


# --- fenced code blocks ---------------------------------------------------------


@dataclass(frozen=True)
class CodeBlock:
    language: str
    body: str
    span: tuple[int, int]  # byte offsets of the body in the source text
    repaired: bool = False


def extract_code_blocks(text: str) -> list[CodeBlock]:
    """All triple-backtick blocks in order; a dangling fence runs to EOF (R1)."""
    blocks: list[CodeBlock] = []
    offset = 0
    open_at = None
    language = ""
    body_start = 0
    for raw in text.splitlines(keepends=True):
        stripped = raw.strip()
        if stripped.startswith("```"):
            if open_at is None:
                open_at = offset
                language = stripped[3:].strip()
                body_start = offset + len(raw)
            else:
                body = text[body_start:offset]
                blocks.append(CodeBlock(language=language,
                                        body=_strip_final_newline(body),
                                        span=(body_start, offset)))
                open_at = None
        offset += len(raw)
    if open_at is not None:
        body = text[body_start:]
        blocks.append(CodeBlock(language=language, body=_strip_final_newline(body),
                                span=(body_start, len(text)), repaired=True))
    return blocks


def _strip_final_newline(body: str) -> str:
    return body[:-1] if body.endswith("\n") else body


def parse_llm_response(text: str) -> ALO:
    """Locate the ALO document inside a raw model response and parse it.

    Fenced blocks are tried first; otherwise the whole response is repaired
    and parsed. Raises ParseError when no document can be found.
    """
    for block in extract_code_blocks(text):
        repaired = repair(block.body).text
        for ln in repaired.split("\n"):
            if ln.strip():
                if ln.startswith("# ALO:"):
                    return parse_alo_markdown(block.body)
                break
    return parse_alo_markdown(text)


# --- markdown parameter tables --------------------------------------------------


@dataclass(frozen=True)
class ParameterTable:
    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...] = ()


_SEPARATOR_ROW_RE = re.compile(r"^\|?[\s:|-]+\|?$")


def parse_parameter_table(text: str) -> ParameterTable:
    """First pipe-delimited table in the text; prose around it is ignored."""
    lines = text.split("\n")
    start = None
    for i, ln in enumerate(lines):
        if "|" in ln and ln.strip():
            start = i
            break
    if start is None:
        raise NoTableFoundError("no pipe-delimited table in text")
    header = _split_row(lines[start])
    rows: list[tuple[str, ...]] = []
    for j in range(start + 1, len(lines)):
        ln = lines[j]
        if "|" not in ln or not ln.strip():
            break
        if _SEPARATOR_ROW_RE.match(ln.strip()):
            continue
        cells = _split_row(ln)
        if len(cells) != len(header):
            raise RaggedRowError(j + 1, f"line {j + 1}: row has {len(cells)} cells, "
                                        f"header has {len(header)}")
        rows.append(cells)
    return ParameterTable(header=header, rows=tuple(rows))


def _split_row(line: str) -> tuple[str, ...]:
    body = line.strip()
    if body.startswith("|"):
        body = body[1:]
    if body.endswith("|"):
        body = body[:-1]
    return tuple(cell.strip() for cell in body.split("|"))
