import numpy as np
import pytest

from qrlsim.qstate import Statevector


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_amps(rng, n):
    z = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    return z / np.linalg.norm(z)


def same_up_to_phase(a: Statevector, b: Statevector, atol=1e-12) -> bool:
    return abs(abs(np.vdot(a.amplitudes, b.amplitudes)) - 1) <= atol


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in mod.LINES:
            terminalreporter.write_line(line)
