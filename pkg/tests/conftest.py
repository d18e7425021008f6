import os

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def cache_root(tmp_path_factory):
    """Private reference-optimum cache so runs never depend on ~/.cache state."""
    d = tmp_path_factory.mktemp("hebsg-cache")
    old = os.environ.get("HEBSG_CACHE")
    os.environ["HEBSG_CACHE"] = str(d)
    yield d
    if old is None:
        os.environ.pop("HEBSG_CACHE", None)
    else:
        os.environ["HEBSG_CACHE"] = old


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    lines = request.config.stash[ACCEPTANCE]

    def report(num, title, ok, detail, elapsed, limit):
        in_time = elapsed < limit
        passed = bool(ok) and in_time
        line = (f"{'PASS' if passed else 'FAIL'}  criterion {num:>2}  {title}: {detail}"
                f"  [{elapsed:.2f}s, limit {limit:g}s{'' if in_time else ', TOO SLOW'}]")
        lines.append(line)
        print(line)
        assert ok, line
        assert in_time, line

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
