import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def random_spd(rng, p, jitter=0.5):
    a = rng.standard_normal((p, p))
    return a @ a.T / p + jitter * np.eye(p)


def toeplitz2():
    return np.array([[1.0, 0.5], [0.5, 1.0]])


THETA_T2 = np.array([[4 / 3, -2 / 3], [-2 / 3, 4 / 3]])


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
