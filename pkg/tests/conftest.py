import numpy as np
import pytest

from octgan.rng import PortableRng


@pytest.fixture
def rng():
    """A fresh deterministic generator per test."""
    return PortableRng(1234)


@pytest.fixture
def rng64():
    """Generator plus a float64 default-dtype context for numeric oracles."""
    from octgan.tensor import using_dtype
    with using_dtype(np.float64):
        yield PortableRng(1234)
