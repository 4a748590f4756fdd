import pytest

ACCEPTANCE_LINES = []


def pytest_addoption(parser):
    parser.addoption("--slow", action="store_true", default=False, help="run long reproduction cases")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--slow"):
        return
    skip = pytest.mark.skip(reason="needs --slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: (int(s.split()[1].split("/")[0].rstrip(".:")), s)):
        terminalreporter.write_line(line)
