import numpy as np
import pytest

from hecke_mating.binvolution import shipped_instance


@pytest.fixture(scope="session")
def instance():
    return shipped_instance(2)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def disc_points(rng, n, radius=0.999):
    r = radius * np.sqrt(rng.random(n))
    return r * np.exp(2j * np.pi * rng.random(n))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance")
        for line in lines:
            terminalreporter.write_line(line)
