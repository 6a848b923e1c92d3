import warnings

import numpy as np
import pytest

from iterproj.discretization import Discretization
from iterproj.mesh import build_uniform_cube_mesh
from iterproj.problems import problem1_spec
from iterproj.projector import ParameterWarning


@pytest.fixture(scope="session")
def mesh2():
    return build_uniform_cube_mesh(2)


@pytest.fixture(scope="session")
def mesh3():
    return build_uniform_cube_mesh(3)


@pytest.fixture(scope="session")
def disc2():
    return Discretization.for_problem(problem1_spec(1.0), 2)


@pytest.fixture(scope="session")
def disc3():
    return Discretization.for_problem(problem1_spec(1.0), 3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def quiet_params():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ParameterWarning)
        yield


def zero_trace_random(disc, rng):
    v = rng.standard_normal(disc.n_velocity)
    v[disc.layout.dirichlet_mask] = 0.0
    return v


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
