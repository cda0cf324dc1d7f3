from importlib import resources

import pytest

from adslots import io as aio

ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


def fixture_path(name: str):
    return resources.files("adslots") / "fixtures" / f"{name}.inst"


def load_fixture(name: str):
    return aio.load_instance(fixture_path(name))


@pytest.fixture
def fig1():
    return load_fixture("fig1")


@pytest.fixture
def fig2():
    return load_fixture("fig2")


@pytest.fixture
def ex1():
    return load_fixture("ex1")


@pytest.fixture
def ex2():
    return load_fixture("ex2")


@pytest.fixture
def ex3():
    return load_fixture("ex3")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k.split()[0].strip("#"))):
        ok, detail = ACCEPTANCE_RESULTS[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
