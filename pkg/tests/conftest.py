import numpy as np
import pytest

from fsirelax.eos import STEEL, VAPOR, WATER
from fsirelax.fvm import Model
from fsirelax.scenarios import fluid_state


@pytest.fixture
def model():
    return Model(STEEL, VAPOR, WATER)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def liquid_state(alpha1=0.1, p=1.75e7, v=0.0):
    """Single conserved fluid state in pressure and velocity equilibrium."""
    return fluid_state(np.array([alpha1]), p, VAPOR, WATER, v)[:, 0]


def random_fluid_state(rng, nonequilibrium=True):
    a = rng.uniform(0.05, 0.95)
    p = 10 ** rng.uniform(3, 7.5)
    U = liquid_state(a, p, rng.normal(0, 3))
    if nonequilibrium:
        U[1] *= rng.uniform(0.8, 1.2)
        U[2] = U[1] * rng.normal(0, 3)
    return U


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import summary_lines

    lines = summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
