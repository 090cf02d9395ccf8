import pytest

from wsnsched.scenario import load_scenario
from wsnsched.topology import nid

_criteria: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


def pytest_runtest_logreport(report):
    marker = getattr(report, "_criterion", None)
    if marker is None:
        return
    number, title = marker
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        prev = _criteria.get(number, (title, "PASS"))[1]
        status = "PASS" if report.outcome == "passed" and prev == "PASS" else "FAIL"
        _criteria[number] = (title, status)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result()._criterion = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, status = _criteria[number]
        terminalreporter.write_line(f"{status} criterion {number}: {title}")


@pytest.fixture(scope="session")
def figure1():
    return load_scenario("figure1.scn")


@pytest.fixture(scope="session")
def cluster1(figure1):
    return figure1.topologies()[0]


@pytest.fixture(scope="session")
def cluster2(figure1):
    return figure1.topologies()[1]


@pytest.fixture
def ids():
    return {label: nid(v) for label, v in
            dict(A="0100", B="0001", C="0111", D="0101", E="0011", F="0010",
                 G="1010", H="1100", I="1011", J="1111", K="1110", L="1101").items()}
