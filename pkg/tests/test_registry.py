import json
import random

import pytest
from hypothesis import given, settings

from alos import canned
from alos.errors import CrossReferenceBrokenError, InvalidALOError, NotFoundError
from alos.model import ALO, ManagerObject, PolicyRule, SkillSpec, SubObject, validate
from alos.registry import Registry, load, registry_get, registry_put, save
from strategies import alos, random_alo


def test_put_into_empty_registry(cat):
    reg = registry_put(Registry(), cat)
    assert len(reg) == 1
    assert "cat" in reg


def test_put_revalidates_everything(cat, roomba):
    reg = Registry()
    registry_put(reg, cat)
    registry_put(reg, roomba)
    assert len(reg) == 2
    for alo in reg:
        assert validate(alo).ok


def test_put_rejects_invalid_alo():
    bad = ALO("x", "x", (), ManagerObject("ghost", ("s0",)))
    with pytest.raises(InvalidALOError):
        registry_put(Registry(), bad)


def test_put_breaking_cross_reference_is_atomic(cat, roomba, pair):
    reg = Registry()
    for alo in (cat, roomba, pair):
        registry_put(reg, alo)
    # replacement roomba without the flee skill the pair rule needs
    gutted = SubObject("chassis", skills=(SkillSpec("clean", "move", {"speed": 6.0}),))
    replacement = ALO("roomba", "roomba", (gutted,),
                      ManagerObject("clean", ("clean",)))
    with pytest.raises(CrossReferenceBrokenError):
        registry_put(reg, replacement)
    assert registry_get(reg, "roomba") == roomba  # unchanged


def test_put_pair_before_partner_is_rejected(cat, pair):
    reg = registry_put(Registry(), cat)
    with pytest.raises(CrossReferenceBrokenError):
        registry_put(reg, pair)  # references roomba, not registered yet


def test_get_returns_stored_value(cat):
    reg = registry_put(Registry(), cat)
    assert registry_get(reg, "cat") == cat


def test_get_missing_name(cat):
    reg = registry_put(Registry(), cat)
    with pytest.raises(NotFoundError):
        registry_get(reg, "dog")


def test_save_load_round_trip(tmp_path, cat, roomba, pair):
    reg = Registry(tmp_path)
    for alo in (cat, roomba, pair):
        registry_put(reg, alo)
    save(reg)
    loaded, problems = load(tmp_path)
    assert problems == []
    assert loaded.entries == reg.entries


def test_save_writes_both_files(tmp_path, cat):
    reg = Registry(tmp_path)
    registry_put(reg, cat)
    save(reg)
    assert (tmp_path / "cat.alo.md").exists()
    assert (tmp_path / "cat.alo.json").exists()
    assert not reg.dirty


def test_load_empty_directory(tmp_path):
    reg, problems = load(tmp_path)
    assert len(reg) == 0
    assert problems == []


def test_load_skips_truncated_file_with_report(tmp_path, cat, roomba):
    reg = Registry(tmp_path)
    registry_put(reg, cat)
    registry_put(reg, roomba)
    save(reg)
    payload = (tmp_path / "roomba.alo.json").read_text(encoding="utf-8")
    (tmp_path / "roomba.alo.json").write_text(payload[:len(payload) // 2],
                                              encoding="utf-8")
    loaded, problems = load(tmp_path)
    assert "cat" in loaded
    assert "roomba" not in loaded
    assert any(p.kind == "CorruptEntry" and p.file == "roomba.alo.json"
               for p in problems)


def test_load_reports_divergent_markdown(tmp_path, cat):
    reg = Registry(tmp_path)
    registry_put(reg, cat)
    save(reg)
    md = tmp_path / "cat.alo.md"
    md.write_text(md.read_text(encoding="utf-8").replace("= 80", "= 70"),
                  encoding="utf-8")
    loaded, problems = load(tmp_path)
    assert registry_get(loaded, "cat") == cat  # sidecar wins
    assert any(p.kind == "Divergence" for p in problems)


def test_load_honors_markdown_without_sidecar(tmp_path, cat):
    from alos.parser import serialize
    (tmp_path / "cat.alo.md").write_text(serialize(cat), encoding="utf-8")
    loaded, problems = load(tmp_path)
    assert "cat" in loaded
    assert any(p.kind == "MissingSidecar" for p in problems)


def test_load_drops_entry_with_broken_reference(tmp_path, cat, roomba, pair):
    reg = Registry(tmp_path)
    for alo in (cat, roomba, pair):
        registry_put(reg, alo)
    save(reg)
    (tmp_path / "roomba.alo.json").unlink()
    (tmp_path / "roomba.alo.md").unlink()
    loaded, problems = load(tmp_path)
    assert "cat meets roomba" not in loaded
    assert any(p.kind == "CrossReferenceBroken" for p in problems)


@given(alos)
@settings(max_examples=50)
def test_save_load_property(tmp_path_factory, alo):
    root = tmp_path_factory.mktemp("reg")
    reg = Registry(root)
    registry_put(reg, alo)
    save(reg)
    loaded, problems = load(root)
    assert problems == []
    assert loaded.entries == reg.entries


def test_birth_invariant_random_puts():
    rng = random.Random(31337)
    reg = Registry()
    for i in range(60):
        registry_put(reg, random_alo(rng))
        for alo in reg:
            assert validate(alo).ok


def test_save_without_root_is_io_failure(cat):
    from alos.errors import IoFailureError
    reg = registry_put(Registry(), cat)
    with pytest.raises(IoFailureError):
        save(reg)
