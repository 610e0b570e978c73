import numpy as np
import pytest
from hypothesis import settings

from pathsens.model import load_network, fixture_path, network_from_reactions, MassAction, MichaelisMenten

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


@pytest.fixture(scope="session")
def poisson():
    return load_network(fixture_path("poisson"))


@pytest.fixture(scope="session")
def birthdeath():
    return load_network(fixture_path("birthdeath"))


@pytest.fixture(scope="session")
def inert():
    return load_network(fixture_path("birthdeath_inert"))


@pytest.fixture(scope="session")
def egfr():
    return load_network(fixture_path("egfr_standin"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def mixed_net():
    """Small network touching every rate-law branch: orders 1-3 and an MM channel."""
    return network_from_reactions(
        ["A", "B", "C"], ["k1", "k2", "k3", "V", "Km"],
        [
            ({}, {0: 1}, MassAction(0)),
            ({0: 1, 1: 1}, {2: 1}, MassAction(1, ((0, 1), (1, 1)))),
            ({0: 2}, {1: 1}, MassAction(2, ((0, 2),))),
            ({2: 1}, {}, MichaelisMenten(3, 4, 2)),
        ],
    )


# acceptance criteria append (label, passed, detail) here; printed after the run
ACCEPTANCE: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")
