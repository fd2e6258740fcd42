import itertools

import pytest
from hypothesis import settings

from vershik_lab import examples

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def increment(bits):
    """Little-endian add-one with carry; None when every bit is 1."""
    out = list(bits)
    for i, b in enumerate(out):
        if b == 0:
            out[i] = 1
            return tuple(out)
        out[i] = 0
    return None


def words(length):
    return list(itertools.product((0, 1), repeat=length))


@pytest.fixture(scope="session")
def odometer():
    return examples.odometer_system(depth_bound=10)


@pytest.fixture(scope="session")
def dh():
    return examples.dh_nested()


@pytest.fixture(scope="session")
def two_limits():
    return examples.nonsemisat_bratteli(depth_bound=12)
