import time

import pytest

LINES = pytest.StashKey[list]()


class Criterion:
    """Times one acceptance criterion and records its pass/fail line."""

    def __init__(self, lines, number, limit):
        self.lines = lines
        self.number = number
        self.limit = limit
        self.start = time.perf_counter()
        self.line = None

    @property
    def elapsed(self):
        return time.perf_counter() - self.start

    def check(self, ok, detail):
        elapsed = self.elapsed
        in_time = self.limit is None or elapsed < self.limit
        limit = "" if self.limit is None else ", limit %ds" % self.limit
        self.line = "%s criterion %d: %s (%.1fs%s)" % (
            "PASS" if ok and in_time else "FAIL", self.number, detail, elapsed, limit)
        self.lines.append(self.line)
        print(self.line)
        assert ok, detail
        assert in_time, "took %.1fs, limit %ds" % (elapsed, self.limit)


def pytest_configure(config):
    config.stash[LINES] = []


@pytest.fixture
def criterion(request):
    lines = request.config.stash[LINES]
    made = []

    def make(number, limit=None):
        made.append(Criterion(lines, number, limit))
        return made[-1]

    yield make
    for c in made:
        if c.line is None:
            lines.append("FAIL criterion %d: raised before completing (%.1fs)"
                         % (c.number, c.elapsed))


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash[LINES]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
