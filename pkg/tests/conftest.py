import pytest

from jjshadow.geometry import EvaporatorGeometry, JunctionDesign, Variant, WaferPoint


@pytest.fixture
def geom():
    return EvaporatorGeometry()


@pytest.fixture
def origin():
    return WaferPoint(0.0, 0.0)


@pytest.fixture
def design_200():
    return JunctionDesign(Variant.MANHATTAN, 200.0, 200.0)
