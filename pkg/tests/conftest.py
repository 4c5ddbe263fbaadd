import pytest

from kgdelta import ModelParams

_LINES = pytest.StashKey[dict]()


@pytest.fixture
def cubic():
    return ModelParams(1.0, 0.0, 0.0, 3.0)


def pytest_configure(config):
    config.stash[_LINES] = {}


def _number(item):
    mark = item.get_closest_marker("criterion")
    return mark.args[0] if mark else None


@pytest.fixture
def criterion(request):
    """Record a PASS/FAIL line for the acceptance criterion of this test, then assert."""
    k = _number(request.node)
    lines = request.config.stash[_LINES]

    def report(ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
        lines[k] = line
        print(line)
        assert ok, line

    return report


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    rep = yield
    k = _number(item)
    lines = item.config.stash[_LINES]
    if k is not None and rep.when == "call" and rep.failed and k not in lines:
        lines[k] = f"FAIL criterion {k}: raised {call.excinfo.typename}: {call.excinfo.value}"
    return rep


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash[_LINES]
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
