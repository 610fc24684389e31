"""
Shared fixtures for the test suite
"""

import pytest

from ehcap.ehmodel import ChannelModel

from .helpers import GoldenValues, uniform_instance


def pytest_addoption(parser):
    parser.addoption("--record-golden", action="store_true", default=False,
                     help="store computed reference values in tests/golden_values.json")


@pytest.fixture
def channel():
    return ChannelModel(1.0)


@pytest.fixture
def buffered_instance():
    """Buffer of 4 quanta, harvest uniform on {0..4}"""
    return uniform_instance(4, 4)


@pytest.fixture
def golden(request):
    return GoldenValues(record=request.config.getoption("--record-golden"))
