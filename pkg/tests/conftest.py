from pathlib import Path

import numpy as np
import pytest

from qtmlab.bundled import fixture_names, load_fixture
from qtmlab.machine import load_machine

DATA = Path(__file__).parent / "data"
FIXTURES = fixture_names()
HALTING_FIXTURES = [f for f in FIXTURES if f != "loop-forever"]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def machines():
    return {name: load_fixture(name) for name in FIXTURES}


@pytest.fixture(scope="session")
def mutated():
    return load_machine(DATA / "mutated-move-halt.qtm")


def unit(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
