import numpy as np
import pytest

from dopo_qb import fock


def random_density(n, rng, rank=None):
    """Full-rank (or rank-limited) random density matrix of order n."""
    rank = rank or n
    g = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_state(dims, rng, rank=None):
    return fock.DensityMatrix(random_density(int(np.prod(dims)), rng, rank), tuple(dims))


def random_hermitian(n, rng):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def runner():
    """One memoizing runner per test session, so expensive charging runs are shared."""
    from dopo_qb.experiments import Runner

    return Runner()


@pytest.fixture(scope="session")
def default_config():
    from dopo_qb import config

    return config.resolve()


@pytest.fixture(scope="session")
def outcome(runner, default_config):
    """``outcome(name)`` runs a catalog experiment once per session with default settings."""
    from dataclasses import replace

    from dopo_qb import experiments

    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = experiments.run(replace(default_config, experiment=name), runner)
        return cache[name]

    return get


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    verdicts = test_acceptance.VERDICTS
    if verdicts:
        terminalreporter.section("acceptance criteria")
        for key in sorted(verdicts):
            terminalreporter.write_line(verdicts[key].line())
