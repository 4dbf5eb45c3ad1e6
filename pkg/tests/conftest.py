import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_criteria: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    # record the call phase, or the phase that stopped the test early
    if rep.when == "call" or rep.outcome != "passed":
        _criteria.setdefault(item.nodeid, (mark.args[0], rep.outcome))
        if rep.when == "call":
            _criteria[item.nodeid] = (mark.args[0], rep.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    tags = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}
    for label, outcome in sorted(_criteria.values()):
        terminalreporter.write_line(f"[{tags[outcome]}] {label}")
