import os
import sys

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, ROOT)
sys.path.insert(0, os.path.join(ROOT, "src"))

from corpus import load_design  # noqa: E402
from textio import parse_state  # noqa: E402

DATA = os.path.join(ROOT, "data")


def data_path(name: str) -> str:
    return os.path.join(DATA, name)


@pytest.fixture
def fig1():
    return load_design(data_path("fig1.ccdfg")).design


@pytest.fixture
def fig1_state():
    with open(data_path("fig1.cstate"), "rb") as f:
        return parse_state(f.read())


@pytest.fixture
def hazard():
    return load_design(data_path("hazard.ccdfg")).design


@pytest.fixture
def prefix_sum():
    return load_design(data_path("prefix_sum.ccdfg")).design


@pytest.fixture
def xorchain():
    return load_design(data_path("xorchain.ccdfg")).design


@pytest.fixture
def branching():
    return load_design(data_path("branching.ccdfg")).design
