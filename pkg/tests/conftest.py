import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_RESULTS_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS_KEY] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion outcome for the terminal summary."""
    results = request.config.stash[_RESULTS_KEY]

    def record(name: str, ok: bool, detail: str) -> bool:
        results.append((name, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS_KEY, [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in results:
        terminalreporter.write_line(f"{name}: {'PASS' if ok else 'FAIL'}  {detail}")
