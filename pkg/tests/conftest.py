import pytest

from boards import pro_mini_fixture, single_trace_board

_criteria: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion number and summary")


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, text = mark.args
    failed = call.excinfo is not None and not call.excinfo.errisinstance(pytest.skip.Exception)
    if call.when == "call" or failed:
        prev = _criteria.get(n, (text, "PASS"))[1]
        _criteria[n] = (text, "FAIL" if failed or prev == "FAIL" else "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        text, outcome = _criteria[n]
        terminalreporter.write_line(f"criterion {n:2d}: {outcome}  {text}")


@pytest.fixture(scope="session")
def pro_mini():
    return pro_mini_fixture()


@pytest.fixture
def single_trace():
    return single_trace_board()
