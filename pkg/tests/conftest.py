import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record():
    """Record one acceptance line; the terminal summary prints them all."""

    def _record(number: int, title: str, ok: bool, detail: str, seconds: float):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title} ({detail}; {seconds:.2f} s)"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
