import pytest

from longmv import MarketParams, MortalityParams, ScenarioSpec
from longmv.bsurface import SurfaceGrid


@pytest.fixture(scope="session")
def market():
    return MarketParams()


@pytest.fixture(scope="session")
def mortality():
    return MortalityParams()


@pytest.fixture(scope="session")
def spec():
    return ScenarioSpec()


@pytest.fixture(scope="session")
def small_grid():
    """Coarse surface grid for unit tests; acceptance uses the default grid."""
    return SurfaceGrid(n_t=21, n_lambda=11, lambda_max=0.6, n_inner=1500, substeps=4)


@pytest.fixture(scope="session")
def surface_cache(tmp_path_factory):
    return tmp_path_factory.mktemp("surface_cache")
