import functools
import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from nilcps.cli import bundled_path, resolve_scheme_path  # noqa: E402
from nilcps.io import load_scheme  # noqa: E402


@functools.lru_cache(maxsize=None)
def bundled(name):
    return load_scheme(resolve_scheme_path(name))


@pytest.fixture(scope="session")
def schemes():
    return bundled


@pytest.fixture(scope="session")
def arrangement_dir():
    return bundled_path("arrangements", "")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
