import pytest

ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record one acceptance line and fail the test if it did not hold."""

    def record(number, ok, detail):
        ACCEPTANCE[number] = (ok, detail)
        print(f"{'PASS' if ok else 'FAIL'} [{number}] {detail}")
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} [{number:2d}] {detail}")
