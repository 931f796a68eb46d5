import pytest

ACCEPTANCE_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = {}


@pytest.fixture
def criterion(request):
    """Record an acceptance line: ``criterion(n, text)`` then assert as usual."""
    lines = request.config.stash[ACCEPTANCE_KEY]

    def record(number, text):
        lines[request.node.nodeid] = (number, text)

    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        lines = item.config.stash[ACCEPTANCE_KEY]
        if item.nodeid in lines:
            number, text = lines[item.nodeid]
            lines[item.nodeid] = (number, text, rep.passed)


def pytest_terminal_summary(terminalreporter, config):
    lines = [v for v in config.stash[ACCEPTANCE_KEY].values() if len(v) == 3]
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, text, passed in sorted(lines):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  AC{number:>2}  {text}")
