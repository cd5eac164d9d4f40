import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from stablegirsanov.stable_process import StableParams

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def p1():
    return StableParams(1, 0.5)


@pytest.fixture
def p3():
    return StableParams(3, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# one summary line per acceptance criterion, built from the outcomes of tests
# marked with @pytest.mark.criterion(n, title)
_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is None or (rep.when != "call" and not rep.failed and not rep.skipped):
        return
    n, title = m.args
    entry = _CRITERIA.setdefault(n, {"title": title, "passed": [], "xfailed": [], "failed": []})
    name = item.name
    if hasattr(rep, "wasxfail"):
        if rep.skipped:
            entry["xfailed"].append(name)
        else:
            entry["failed"].append(name + " (xpass)")
    elif rep.passed and rep.when == "call":
        entry["passed"].append(name)
    elif rep.failed:
        entry["failed"].append(name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        if e["failed"]:
            status = "FAIL"
        elif e["xfailed"]:
            status = "FAIL (expected; strict xfail)"
        else:
            status = "PASS"
        extra = f"; xfail: {', '.join(e['xfailed'])}" if e["xfailed"] else ""
        extra += f"; failed: {', '.join(e['failed'])}" if e["failed"] else ""
        tr.write_line(f"criterion {n:2d} {e['title']}: {status} "
                      f"[{len(e['passed'])} passed{extra}]")
