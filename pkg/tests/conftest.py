import numpy as np
import pytest

from hyperlab.groups import (
    fuchsian_genus2,
    split_amalgam_genus2,
    split_hnn_genus2,
)


@pytest.fixture(scope="session")
def fuchsian():
    """Shared genus-2 table; the word cache is append-only, so sharing is safe."""
    return fuchsian_genus2()


@pytest.fixture(scope="session")
def amalgam():
    return split_amalgam_genus2()


@pytest.fixture(scope="session")
def hnn():
    return split_hnn_genus2()


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
