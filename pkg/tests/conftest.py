import numpy as np
import pytest

from qdecoh.model import ModelParams
from qdecoh.states import XState

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def fig2_params(gamma=0.05, **over):
    base = dict(j_plus=1.0, j_minus=0.5, j_z=1.0, dm=1.0, field=1.0, inhomogeneity=0.5)
    base.update(over)
    return ModelParams(gamma=gamma, **base)


@pytest.fixture
def fig2():
    return fig2_params()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_xstate(rng, degenerate=False, real=False, block=None):
    """Random valid X state.

    ``degenerate`` forces a+b = c+d (maximally mixed marginal of qubit a);
    ``block`` of "outer"/"inner" zeroes the other block.
    """
    a, b, c, d = rng.dirichlet(np.ones(4))
    if block == "outer":
        a, d = a / (a + d), d / (a + d)
        b = c = 0.0
    elif block == "inner":
        b, c = b / (b + c), c / (b + c)
        a = d = 0.0
    if degenerate:
        s1, s2 = a + b, c + d
        a, b, c, d = a / (2 * s1), b / (2 * s1), c / (2 * s2), d / (2 * s2)
    ph_w, ph_z = (1.0, 1.0) if real else np.exp(2j * np.pi * rng.uniform(size=2))
    sgn = rng.choice([-1.0, 1.0], size=2) if real else (1.0, 1.0)
    w = np.sqrt(a * d) * rng.uniform() * ph_w * sgn[0]
    z = np.sqrt(b * c) * rng.uniform() * ph_z * sgn[1]
    return XState(a, b, c, d, w, z)


def random_unitary(rng, n=2):
    q, r = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_params(rng, scale=1.5):
    vals = rng.normal(scale=scale, size=6)
    return ModelParams(j_plus=vals[0], j_minus=vals[1], j_z=vals[2], dm=vals[3],
                       field=vals[4], inhomogeneity=vals[5], gamma=abs(rng.normal(scale=0.2)))


BELL_PHI = np.zeros((4, 4), dtype=complex)
BELL_PHI[0, 0] = BELL_PHI[3, 3] = BELL_PHI[0, 3] = BELL_PHI[3, 0] = 0.5
