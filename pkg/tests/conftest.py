import pytest

from trajmatch import _blossom


class AcceptanceRecorder:
    """Collects one pass/fail line per acceptance criterion."""

    def __init__(self):
        self.lines: list[str] = []

    def check(self, number: int, description: str, passed: bool, detail: str = ""):
        status = "PASS" if passed else "FAIL"
        suffix = f" [{detail}]" if detail else ""
        line = f"criterion {number:2d} {status} - {description}{suffix}"
        self.lines.append(line)
        print(line)
        assert passed, line


_RECORDER = AcceptanceRecorder()


@pytest.fixture(scope="session")
def acceptance() -> AcceptanceRecorder:
    return _RECORDER


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _RECORDER.lines:
        terminalreporter.section("acceptance criteria")
        for line in _RECORDER.lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session", autouse=True)
def warm_jit():
    # One-time JIT compilation so timed tests measure the algorithm, not
    # the compiler.
    _blossom.warm_up()
