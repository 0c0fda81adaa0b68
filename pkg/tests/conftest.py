import os

import pytest

from pysparsetree.ingest import compress, load_csv, prepare

from .instances import parity

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture_path(name):
    return os.path.join(FIXTURES, name)


@pytest.fixture
def xor_csv():
    return fixture_path("xor.csv")


@pytest.fixture
def weather_csv():
    return fixture_path("weather.csv")


@pytest.fixture
def monk1_train():
    return fixture_path("monk1_train.csv")


@pytest.fixture
def monk1_test():
    return fixture_path("monk1_test.csv")


@pytest.fixture
def xor_dataset(xor_csv):
    return prepare(load_csv(xor_csv))


@pytest.fixture
def parity_dataset():
    bits, labels = parity(3)
    return compress(bits, labels)
