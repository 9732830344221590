import pytest

from birefocus import materials


@pytest.fixture(scope="session")
def catalog():
    return materials.builtin_catalog()


@pytest.fixture(scope="session")
def sapphire(catalog):
    return catalog["sapphire"]


@pytest.fixture(scope="session")
def quartz(catalog):
    return catalog["quartz"]


@pytest.fixture(scope="session")
def fused_silica(catalog):
    return catalog["fused-silica"]
