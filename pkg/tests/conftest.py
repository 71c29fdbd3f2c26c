import numpy as np
import pytest

from fbmlab import (
    ExponentChain,
    calibrate_chain_constants,
    dirichlet_laplacian_1d,
)
from fbmlab.paths import TimeGrid


@pytest.fixture(scope="session")
def chain():
    return ExponentChain(0.45, 0.55, 0.62, 0.70, 0.75)


@pytest.fixture(scope="session")
def operator():
    """Default spectral operator: 8-mode Dirichlet Laplacian on (0, 1)."""
    return dirichlet_laplacian_1d(8)


@pytest.fixture(scope="session")
def wide_operator():
    """Operator with lambda_1 ~ 39.5 so that decay rates up to 12 are admissible."""
    return dirichlet_laplacian_1d(8, length=0.5, lam=12.0)


@pytest.fixture(scope="session")
def chain_constants(operator, chain):
    """Measured c_S and c_alpha_beta for the default operator, shared."""
    return calibrate_chain_constants(operator, chain, seed=0)


@pytest.fixture(scope="session")
def wide_chain_constants(wide_operator, chain):
    return calibrate_chain_constants(wide_operator, chain, seed=0)


@pytest.fixture
def unit_grid():
    return TimeGrid(0.0, 1 / 256, 257)


def make_grid(t0: float, h: float, end: float) -> TimeGrid:
    n = int(np.ceil((end - t0) / h - 1e-9)) + 1
    return TimeGrid(t0, h, n)
