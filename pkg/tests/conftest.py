import pytest

RESULTS: list[str] = []


@pytest.fixture
def record():
    """Append a one-line PASS/FAIL summary, then assert the outcome."""
    def _record(name: str, ok: bool, detail: str, elapsed: float, limit: float):
        in_time = elapsed <= limit
        status = "PASS" if ok and in_time else "FAIL"
        line = f"{status} {name}: {detail}; {elapsed:.1f}s (limit {limit:.0f}s)"
        RESULTS.append(line)
        print(line, flush=True)
        assert ok, line
        assert in_time, line
    return _record


def pytest_terminal_summary(terminalreporter):
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
