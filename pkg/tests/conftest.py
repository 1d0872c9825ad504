import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def acceptance():
    """``record(n, name, ok, detail)`` prints one pass/fail line and fails the test when not ok."""

    def record(n: int, name: str, ok: bool, detail: str) -> None:
        line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}: {name} [{detail}]"
        _ACCEPTANCE[n] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
