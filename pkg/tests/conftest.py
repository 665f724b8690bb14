from __future__ import annotations

from pathlib import Path

import pytest

from shbrace import Trace, parse

FIXTURES = Path(__file__).parent / "fixtures"


def load_fixture(name: str) -> Trace:
    return parse((FIXTURES / name).read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def golden1() -> Trace:
    return load_fixture("golden1.trace")


@pytest.fixture(scope="session")
def golden2() -> Trace:
    return load_fixture("golden2.trace")


@pytest.fixture(scope="session")
def golden3() -> Trace:
    return load_fixture("golden3.trace")


@pytest.fixture(scope="session")
def golden4() -> Trace:
    return load_fixture("golden4.trace")


@pytest.fixture(scope="session")
def goldens(golden1, golden2, golden3, golden4) -> dict[str, Trace]:
    return {
        "golden1": golden1,
        "golden2": golden2,
        "golden3": golden3,
        "golden4": golden4,
    }
