import numpy as np
import pytest

from mcteleport.statevector import StateVector


@pytest.fixture
def rng():
    return np.random.default_rng(97)


def dense_state(num_qubits: int, seed: int) -> StateVector:
    """Full-support random state; deterministic per seed."""
    gen = np.random.default_rng(seed)
    amps = gen.normal(size=1 << num_qubits) + 1j * gen.normal(size=1 << num_qubits)
    amps /= np.linalg.norm(amps)
    return StateVector(amps)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of a run."""
    rows = []
    for status, word in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for rep in terminalreporter.stats.get(status, []):
            if getattr(rep, "when", "call") != "call" and status != "error":
                continue
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance" in nodeid:
                rows.append((nodeid.split("::")[-1], word))
    if rows:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, word in sorted(set(rows)):
            terminalreporter.write_line(f"{word}  {name}")
