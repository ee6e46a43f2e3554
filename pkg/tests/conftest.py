import re

import pytest

_CRITERION = re.compile(r"test_criterion_(\d+)([a-z]?)_(\w+)")
_results: dict = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        key = (int(m.group(1)), m.group(2), m.group(3))
        _results.setdefault(key, []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for (num, sub, name), outcomes in sorted(_results.items()):
        verdict = "PASS" if all(o == "passed" for o in outcomes) else "FAIL"
        label = f"{num}{sub}"
        tr.write_line(f"criterion {label:<4} {verdict}  {name.replace('_', ' ')}")


@pytest.fixture
def rng():
    from binsweep.rng import make_rng
    return make_rng(12345)
