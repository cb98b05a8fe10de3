import numpy as np
import pytest

from nlqcbounds import fixture_strategy, garden_hose_compile, make_family


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def eq1():
    return garden_hose_compile(fixture_strategy("eq_n1"))


@pytest.fixture(scope="session")
def eq2():
    return garden_hose_compile(fixture_strategy("eq_n2"))


@pytest.fixture(scope="session")
def eq1_hose():
    return garden_hose_compile(fixture_strategy("eq_n1_hose"))


@pytest.fixture(scope="session")
def EQ1():
    return make_family("EQ", 1)


@pytest.fixture(scope="session")
def EQ2():
    return make_family("EQ", 2)


_criteria: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    key = (str(mark.args[0]), mark.args[1])
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        _criteria[key] = _criteria.get(key, True) and rep.passed


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for (label, text), ok in sorted(_criteria.items(), key=lambda kv: kv[0][0]):
        terminalreporter.write_line(f"criterion {label}: {'PASS' if ok else 'FAIL'}  {text}")
