"""Persistent named registry of ALOs.

Putting an entry triggers the birth hook: the whole registry is re-validated,
including cross-ALO skill references (policy targets of the form
``<alo>.<skill>``), and the put is rejected atomically if anything breaks.

Storage is one human-diffable markdown file plus one JSON sidecar per entry
(``<name>.alo.md`` / ``<name>.alo.json``). The sidecar is the source of
truth; the loader reports divergence instead of silently preferring it.

Concurrency: stored ALOs are immutable values and safe to share, but the
Registry itself is single-writer/multi-reader; put and save need exclusive
access.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

from . import parser
from .errors import (
    CrossReferenceBrokenError,
    InvalidALOError,
    IoFailureError,
    NotFoundError,
)
from .model import ALO, from_dict, to_dict, validate


@dataclass(frozen=True)
class LoadProblem:
    file: str
    kind: str  # CorruptEntry | Divergence | MissingSidecar | CrossReferenceBroken
    detail: str


class Registry:
    """Name -> ALO map with dirty tracking and an optional storage root."""

    def __init__(self, root: Optional[Path] = None):
        self.root = Path(root) if root is not None else None
        self.entries: dict[str, ALO] = {}
        self.dirty: set[str] = set()

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def names(self) -> tuple[str, ...]:
        return tuple(sorted(self.entries))

    def __iter__(self) -> Iterator[ALO]:
        for name in self.names():
            yield self.entries[name]


def cross_reference_problems(entries: dict[str, ALO]) -> list[str]:
    """Broken ``<alo>.<skill>`` policy targets across the whole map."""
    problems = []
    for name, alo in sorted(entries.items()):
        for i, rule in enumerate(alo.managerObj.policy):
            if not rule.is_cross_reference():
                continue
            target_alo, target_skill = rule.cross_target()
            where = f"{name}: managerObj.policy[{i}]"
            other = entries.get(target_alo)
            if other is None:
                problems.append(f"{where} references unknown ALO {target_alo!r}")
            elif other.find_skill(target_skill) is None:
                problems.append(
                    f"{where} references missing skill {target_skill!r} on {target_alo!r}")
    return problems


def registry_put(reg: Registry, alo: ALO) -> Registry:
    """Store/replace an entry; the birth hook re-validates every entry."""
    report = validate(alo)
    if not report.ok:
        raise InvalidALOError(report)
    candidate = dict(reg.entries)
    candidate[alo.name] = alo
    for name, entry in candidate.items():
        entry_report = validate(entry)
        if not entry_report.ok:
            raise InvalidALOError(entry_report)
    broken = cross_reference_problems(candidate)
    if broken:
        raise CrossReferenceBrokenError("; ".join(broken))
    reg.entries = candidate
    reg.dirty.add(alo.name)
    return reg


def registry_get(reg: Registry, name: str) -> ALO:
    try:
        return reg.entries[name]
    except KeyError:
        raise NotFoundError(f"no ALO named {name!r}") from None


def save(reg: Registry, root: Optional[Path] = None) -> None:
    """Write dirty entries to the storage root (markdown + JSON sidecar)."""
    target = Path(root) if root is not None else reg.root
    if target is None:
        raise IoFailureError("registry has no storage root")
    try:
        target.mkdir(parents=True, exist_ok=True)
        for name in sorted(reg.dirty):
            alo = reg.entries[name]
            (target / f"{name}.alo.md").write_text(parser.serialize(alo), encoding="utf-8")
            payload = json.dumps(to_dict(alo), indent=2, sort_keys=True) + "\n"
            (target / f"{name}.alo.json").write_text(payload, encoding="utf-8")
    except OSError as e:
        raise IoFailureError(str(e)) from e
    reg.root = target
    reg.dirty.clear()


def load(root: Path) -> tuple[Registry, list[LoadProblem]]:
    """Read every entry under root, skipping (and reporting) corrupt files."""
    root = Path(root)
    reg = Registry(root)
    problems: list[LoadProblem] = []
    if not root.exists():
        return reg, problems
    try:
        json_files = sorted(root.glob("*.alo.json"))
        md_files = sorted(root.glob("*.alo.md"))
    except OSError as e:
        raise IoFailureError(str(e)) from e

    loaded: dict[str, ALO] = {}
    md_by_stem = {p.name[:-len(".alo.md")]: p for p in md_files}

    for path in json_files:
        stem = path.name[:-len(".alo.json")]
        try:
            alo = from_dict(json.loads(path.read_text(encoding="utf-8")))
            report = validate(alo)
            if not report.ok:
                raise ValueError(report.summary())
        except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as e:
            problems.append(LoadProblem(path.name, "CorruptEntry", str(e)))
            md_by_stem.pop(stem, None)
            continue
        md_path = md_by_stem.pop(stem, None)
        if md_path is None:
            problems.append(LoadProblem(path.name, "Divergence",
                                        "markdown twin missing"))
        else:
            try:
                twin = parser.parse_alo_markdown(md_path.read_text(encoding="utf-8"))
                if twin != alo:
                    problems.append(LoadProblem(
                        md_path.name, "Divergence",
                        "markdown disagrees with JSON sidecar; sidecar wins"))
            except Exception as e:  # sidecar still wins; record why
                problems.append(LoadProblem(md_path.name, "Divergence",
                                            f"markdown unreadable: {e}"))
        loaded[alo.name] = alo

    # Markdown files without a sidecar are still honored, with a warning.
    for stem, md_path in sorted(md_by_stem.items()):
        try:
            alo = parser.parse_alo_markdown(md_path.read_text(encoding="utf-8"))
        except Exception as e:
            problems.append(LoadProblem(md_path.name, "CorruptEntry", str(e)))
            continue
        problems.append(LoadProblem(md_path.name, "MissingSidecar",
                                    "no JSON sidecar; loaded from markdown"))
        loaded[alo.name] = alo

    # Cross references must hold for the loaded set; drop offenders until stable.
    while True:
        broken = cross_reference_problems(loaded)
        if not broken:
            break
        offender = broken[0].split(":", 1)[0]
        problems.append(LoadProblem(f"{offender}.alo.json", "CrossReferenceBroken",
                                    broken[0]))
        loaded.pop(offender, None)

    reg.entries = loaded
    return reg, problems
