import pytest

_RESULTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS] = []


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line for an acceptance criterion."""
    results = request.config.stash[_RESULTS]

    def record(number, title, passed, detail, seconds, limit):
        in_time = seconds < limit
        ok = bool(passed) and in_time
        line = (f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} | {detail} | "
                f"{seconds:.2f}s (limit {limit:g}s)")
        results.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS, [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(results):
        terminalreporter.write_line(line)
