import json
import time
from pathlib import Path

import numpy as np
import pytest

from dramarket.casestudy import CONFIG_PATH, bundled_profiles
from dramarket.config import load_config

FIXTURES = Path(__file__).parent / "fixtures"

# filled by test_acceptance.py, printed at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}
SUITE_LIMIT_S = 60.0
_started = [0.0]


def pytest_sessionstart(session):
    _started[0] = time.perf_counter()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
    elapsed = time.perf_counter() - _started[0]
    status = "PASS" if elapsed < SUITE_LIMIT_S else "FAIL"
    terminalreporter.write_line(f"suite runtime {status}  {elapsed:.1f} s < {SUITE_LIMIT_S:.0f} s")


@pytest.fixture(scope="session")
def profiles():
    return bundled_profiles()


@pytest.fixture(scope="session")
def casestudy_config():
    return load_config(CONFIG_PATH)


@pytest.fixture(scope="session")
def published_ep():
    """Published expected-payoff matrices per variant, as numpy arrays."""
    raw = json.loads((FIXTURES / "published_ep_matrices.json").read_text())
    return {
        name: (np.array(v["ep_A"], dtype=float), np.array(v["ep_B"], dtype=float))
        for name, v in raw["variants"].items()
    }
