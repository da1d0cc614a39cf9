import pytest

from wilddata.riemann import RiemannData
from wilddata.thermo import PrimitiveState, ThermoParams


@pytest.fixture
def params():
    return ThermoParams(2.5)


@pytest.fixture
def sod():
    return RiemannData(PrimitiveState(1.0, 1.0, (0.0, 0.0)), PrimitiveState(0.125, 0.8, (0.0, 0.0)))
