import numpy as np
import pytest

from arena_rigging.synthetic import synthetic_battles


@pytest.fixture(scope="session")
def small_world():
    """Six-model synthetic history, small enough for exhaustive checks."""
    votes, true = synthetic_battles(n_models=6, spacing=40, n_votes=600, seed=3)
    return votes, true


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the test still asserts on its own."""
    def record(name: str, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'}  {name}: {detail}"
        print(line)
        _CRITERIA.append((name, passed, detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, passed, detail in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
