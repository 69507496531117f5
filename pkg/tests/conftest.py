import time

import pytest

_RESULTS = []


class Criterion:
    def __init__(self, number, title, limit_s):
        self.number = number
        self.title = title
        self.limit_s = limit_s
        self.start = time.perf_counter()
        self.detail = ""

    @property
    def elapsed(self):
        return time.perf_counter() - self.start


@pytest.fixture
def criterion(request):
    """Timer/recorder for one acceptance criterion; reports a PASS/FAIL line at the end of the run."""
    made = []

    def make(number, title, limit_s):
        c = Criterion(number, title, limit_s)
        made.append(c)
        return c

    yield make
    failed = request.node.rep_call.failed if hasattr(request.node, "rep_call") else True
    for c in made:
        status = "FAIL" if failed else "PASS"
        _RESULTS.append(f"[{status}] criterion {c.number:>2}: {c.title} ({c.elapsed:.2f}s / limit {c.limit_s}s) {c.detail}")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if _RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_RESULTS, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
