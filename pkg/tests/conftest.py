import pytest

_RESULTS_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_RESULTS_KEY] = {}


@pytest.fixture(scope="session")
def acceptance_results(request):
    """Criterion number -> list of (part, passed, detail); printed at the end of the run."""
    return request.config.stash[_RESULTS_KEY]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS_KEY, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        parts = results[number]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{name}: {text}" if name else text for name, _, text in parts)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
