from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

from sparse_strike.oracle import OracleSession, load_policy_file
from sparse_strike.state import FrameState, StateShape

ROOT = Path(__file__).resolve().parents[1]
POLICY_DIR = ROOT / "src" / "sparse_strike" / "data" / "policies"
DATA_DIR = Path(__file__).resolve().parent / "data"

sys.path.insert(0, str(Path(__file__).resolve().parent / "oracles"))

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def policy_dir() -> Path:
    return POLICY_DIR


@pytest.fixture(scope="session")
def vulnerable_policy():
    return load_policy_file(POLICY_DIR / "linear_vulnerable.json")


@pytest.fixture(scope="session")
def conv_policy():
    return load_policy_file(POLICY_DIR / "conv_small.json")


@pytest.fixture
def vulnerable_session(vulnerable_policy):
    return OracleSession(vulnerable_policy)


@pytest.fixture
def zero_8x8():
    return FrameState.zeros(StateShape(8, 8, 1))


@pytest.fixture(scope="session")
def golden_state():
    from forward_oracle import golden_state_8x8

    return FrameState(np.array(golden_state_8x8()))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}")
