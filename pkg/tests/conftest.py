import pytest

_LINES = pytest.StashKey[list]()


@pytest.fixture
def record(request):
    """Log one PASS/FAIL line per acceptance criterion and return the verdict."""
    lines = request.config.stash.setdefault(_LINES, [])

    def _record(number, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
