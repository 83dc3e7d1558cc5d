import numpy as np
import pytest

from latticehydro.dispersion import build_nearest_neighbor
from latticehydro.random_fields import ConstantProfile, GaussianBump, gibbs_spectral, product_profile


@pytest.fixture(scope="session")
def chain():
    """Reference chain: d=1, n=1, gamma=1, m=1."""
    return build_nearest_neighbor(1, [1.0], [1.0])


@pytest.fixture(scope="session")
def massless_chain():
    return build_nearest_neighbor(1, [1.0], [0.0])


@pytest.fixture(scope="session")
def plane():
    return build_nearest_neighbor(2, [1.0], [1.0])


@pytest.fixture(scope="session")
def gibbs(chain):
    return gibbs_spectral(chain, 1.0)


@pytest.fixture(scope="session")
def bump(chain, gibbs):
    """Product profile with T(r) = 1 + 0.5 exp(-r^2)."""
    return product_profile(GaussianBump(a=0.5, w=1.0), gibbs)


@pytest.fixture(scope="session")
def flat(chain, gibbs):
    return product_profile(ConstantProfile(1.0), gibbs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def T_ref():
    return lambda r: 1.0 + 0.5 * np.exp(-np.asarray(r, dtype=float) ** 2)


_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(n, title, ok, detail)``."""

    def record(n, title, ok, detail=""):
        line = f"criterion {n:>2} {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
        _ACCEPTANCE.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
