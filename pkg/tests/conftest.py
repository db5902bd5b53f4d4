import time

import pytest

_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


class Criterion:
    """Collects the checks of one acceptance criterion and its wall time."""

    def __init__(self, lines, number, title, budget):
        self.lines, self.number, self.title, self.budget = lines, number, title, budget
        self.failures = []
        self.notes = []

    def check(self, ok, note):
        self.notes.append(note)
        if not ok:
            self.failures.append(note)

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        if exc_type is not None:
            self.failures.append(f"{exc_type.__name__}: {exc}")
        self.check(elapsed < self.budget, f"{elapsed:.1f}s (budget {self.budget:g}s)")
        passed = not self.failures
        self.lines.append((self.number, f"[{'PASS' if passed else 'FAIL'}] {self.number:>2}. {self.title}: "
                                        + "; ".join(self.notes if passed else self.failures)))
        if exc_type is None and not passed:
            raise AssertionError("; ".join(self.failures))
        return False


@pytest.fixture
def criterion(request):
    lines = request.config.stash[_LINES]
    return lambda number, title, budget: Criterion(lines, number, title, budget)


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash[_LINES]
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, text in sorted(lines):
            terminalreporter.write_line(text)
