import pytest

from pairinfer import load_bundled


@pytest.fixture(scope="session")
def mwanza():
    return load_bundled("nongender")


@pytest.fixture(scope="session")
def mwanza_gender():
    return load_bundled("gender")
