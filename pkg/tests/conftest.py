import pytest


ACCEPTANCE = {}


@pytest.fixture
def verdict(request):
    """Record a criterion's outcome before the test asserts on it."""

    def record(number: int, title: str, passed: bool, detail: str):
        ACCEPTANCE[number] = (title, bool(passed), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number:2d} {title}: {detail}")
