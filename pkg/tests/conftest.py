import pytest

_RESULTS = {}


class Criterion:
    """Collects named checks for one acceptance criterion."""

    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title
        self.checks = []

    def check(self, name: str, ok: bool, detail: str = ""):
        self.checks.append((name, bool(ok), detail))
        return bool(ok)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(ok for _, ok, _ in self.checks)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        failed = [f"{n} ({d})" if d else n for n, ok, d in self.checks if not ok]
        tail = f"; failed: {', '.join(failed)}" if failed else ""
        return f"criterion {self.number:2d} {status}: {self.title}{tail}"

    def assert_all(self):
        bad = [(n, d) for n, ok, d in self.checks if not ok]
        assert not bad, f"criterion {self.number} failed checks: {bad}"


@pytest.fixture
def criterion(request):
    made = []

    def make(number: int, title: str) -> Criterion:
        c = Criterion(number, title)
        made.append(c)
        return c

    yield make
    for c in made:
        print(c.line())
        _RESULTS[c.number] = c


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        terminalreporter.write_line(_RESULTS[n].line())
