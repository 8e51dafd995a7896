from __future__ import annotations

import copy
import json

import numpy as np
import pytest

from arithbf.sitemodel import FIXTURE_DIR, SiteFixture, load_fixture


def raw_fixture(name: str) -> dict:
    with open(FIXTURE_DIR / f"{name}.json") as fh:
        return json.load(fh)


def mutated(name: str, fn) -> SiteFixture:
    d = copy.deepcopy(raw_fixture(name))
    fn(d)
    return load_fixture(d)


@pytest.fixture(scope="session")
def F1() -> SiteFixture:
    return load_fixture(FIXTURE_DIR / "F1.json")


@pytest.fixture(scope="session")
def F2() -> SiteFixture:
    return load_fixture(FIXTURE_DIR / "F2.json")


@pytest.fixture(scope="session")
def F3() -> SiteFixture:
    return load_fixture(FIXTURE_DIR / "F3.json")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
