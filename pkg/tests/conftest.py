import pytest

# (criterion, passed, detail) appended by tests/test_acceptance.py
ACCEPTANCE = []


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running statistical check")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit, ok, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {crit:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def record():
    def _record(crit, ok, detail=""):
        ACCEPTANCE.append((crit, bool(ok), detail))
        print(f"criterion {crit}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return _record
