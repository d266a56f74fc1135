"""Shared pytest plumbing: acceptance criteria get one summary line each."""

from contextlib import contextmanager

import pytest

_CRITERIA: dict[int, tuple[str, bool]] = {}


def record_criterion(number: int, description: str, passed: bool) -> None:
    _CRITERIA[number] = (description, passed)


@pytest.fixture
def criterion():
    """Context manager wrapping one acceptance check; records pass or fail."""

    @contextmanager
    def _criterion(number: int, description: str):
        try:
            yield
        except BaseException:
            record_criterion(number, description, False)
            raise
        record_criterion(number, description, True)

    return _criterion


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        description, passed = _CRITERIA[number]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number} [{verdict}] {description}")
