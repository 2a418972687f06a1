import pytest

# criterion number -> list of (label, passed, detail), filled by test_acceptance
ACCEPTANCE = {}


def pytest_addoption(parser):
    parser.addoption("--slow", action="store_true", default=False,
                     help="also run paper-scale (lambda_P = 0.001) acceptance runs")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: paper-scale run, enabled with --slow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--slow"):
        return
    skip = pytest.mark.skip(reason="paper-scale run; pass --slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        for label, passed, detail in ACCEPTANCE[num]:
            terminalreporter.write_line(f"criterion {num} [{label}]: {'PASS' if passed else 'FAIL'}  {detail}")
