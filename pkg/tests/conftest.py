import sys

import numpy as np
import pytest

from vacuumlab.channels import ChannelWithVacuum, bomb_channel, depolarizing_to_vacuum, identity_channel
from vacuumlab.samplers import random_channel_with_pure_fixed_point, random_vacuum_pair


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def e0():
    return np.array([1.0, 0.0], dtype=complex)


@pytest.fixture
def bomb(e0):
    return ChannelWithVacuum(bomb_channel(e0), e0)


@pytest.fixture
def empty(e0):
    return ChannelWithVacuum(identity_channel(2), e0)


def apply_to_units(t):
    """Oracle superoperator built by applying ``t`` to every matrix unit."""
    d_in, d_out = t.dim_in, t.dim_out
    cols = []
    for i in range(d_in):
        for j in range(d_in):
            unit = np.zeros((d_in, d_in), dtype=complex)
            unit[i, j] = 1
            cols.append(t.apply(unit).reshape(-1))
    return np.array(cols).T.reshape(d_out * d_out, d_in * d_in)


def infeasible_pairs(rng):
    """Three channel pairs for which interaction-free discrimination is impossible."""
    v = np.array([1.0, 0.0], dtype=complex)
    qubits = (random_channel_with_pure_fixed_point(2, rng=rng), random_channel_with_pure_fixed_point(2, rng=rng))
    depol = (ChannelWithVacuum(depolarizing_to_vacuum(0.3, v), v), ChannelWithVacuum(depolarizing_to_vacuum(0.7, v), v))
    block = random_vacuum_pair(3, 2, rng=rng)[:2]
    return [qubits, depol, block]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
