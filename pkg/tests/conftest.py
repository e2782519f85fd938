import pytest

from rough_edgeworth.coeffs_rbergomi import RoughBergomiParams


@pytest.fixture
def fig1_params():
    return RoughBergomiParams.flat(H=0.07, eta=0.9, rho=-0.9, v0=0.04)
