import functools

import pytest

from lepra_oc.scenarios import build_scenario, preset_names
from lepra_oc.solver import FbsmSettings, fbsm_solve

ACCEPTANCE_LINES: list[str] = []


@functools.lru_cache(maxsize=None)
def solved(name: str):
    """Converged solve of a preset with default settings, plus its wall time."""
    import time

    t0 = time.perf_counter()
    rep = fbsm_solve(build_scenario(name), FbsmSettings())
    return rep, time.perf_counter() - t0


@pytest.fixture(scope="session")
def all_presets():
    return preset_names()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
