import numpy as np
import pytest

from wirerecon.datagen import build_training_set
from wirerecon.mlp import Network, TrainConfig, fit
from wirerecon.wireframe import Wireframe

_CRITERIA: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def criterion_log():
    return _CRITERIA


def make_random_net(rng, hidden=6):
    return Network(
        rng.normal(0, 0.5, (hidden, 16)),
        rng.normal(0, 0.5, hidden),
        rng.normal(0, 0.5, (1, hidden)),
        rng.normal(0, 0.5, 1),
        rng.normal(1, 0.2, 16),
        rng.uniform(0.5, 1.5, 16),
    )


@pytest.fixture
def random_net():
    return make_random_net(np.random.default_rng(7))


@pytest.fixture(scope="session")
def trained_net():
    """A small but genuinely trained network, shared by search and CLI tests."""
    gen = build_training_set(60, seed=3)
    return fit(gen.data, TrainConfig(max_epochs=300, seed=3)).network


def star(ends_xy, apex_xy=(0.0, 0.0), depths=None):
    """An apex joined to each of the given points."""
    pts = np.vstack([apex_xy, ends_xy])
    edges = [(0, k) for k in range(1, len(pts))]
    return Wireframe(pts, np.array(edges), depths)


@pytest.fixture
def unit_square():
    return Wireframe(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float), np.array([[0, 1], [1, 2], [2, 3], [3, 0]]))
