import pytest

ACCEPTANCE = []


@pytest.fixture
def verdict():
    """Record and print one acceptance line, then assert it."""

    def record(label: str, ok: bool, detail: str = "", expected_fail: bool = False):
        tag = "PASS" if ok else ("FAIL (expected, see ledger)" if expected_fail else "FAIL")
        line = f"[{tag}] {label}: {detail}"
        ACCEPTANCE.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
