import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make strategies importable

from alos import canned
from alos.registry import Registry, registry_put


@pytest.fixture
def cat():
    return canned.cat_alo()


@pytest.fixture
def roomba():
    return canned.roomba_alo()


@pytest.fixture
def pair():
    return canned.pair_alo("cat", "roomba")


@pytest.fixture
def stocked_registry(cat, roomba, pair, tmp_path):
    reg = Registry(tmp_path / "reg")
    registry_put(reg, cat)
    registry_put(reg, roomba)
    registry_put(reg, pair)
    return reg
