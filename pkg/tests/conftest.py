import numpy as np
import pytest

from sigdistill.nncore import ArchConfig
from sigdistill.signalgen import DatasetSpec, build_samples, make_dataset

TINY_ARCH = ArchConfig(input_length=64, conv_stages=((8, 5, 2), (16, 5, 2)), hidden=32)


@pytest.fixture(scope="session")
def tiny_spec():
    return DatasetSpec(n_per_class=30, length=64, seed=7)


@pytest.fixture(scope="session")
def tiny_dataset(tiny_spec):
    return make_dataset(tiny_spec)


@pytest.fixture(scope="session")
def full_pool_spec():
    # 10k samples at short length: enough for tight binomial bounds, cheap to build
    return DatasetSpec(n_per_class=1000, length=64, seed=13)


@pytest.fixture(scope="session")
def full_dataset(full_pool_spec):
    return make_dataset(full_pool_spec)
