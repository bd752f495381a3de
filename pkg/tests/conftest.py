import numpy as np
import pytest

from lurefts import bench


@pytest.fixture
def example1():
    return bench.build_example1()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
