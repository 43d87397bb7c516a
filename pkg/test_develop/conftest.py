"""
Fixtures spécifiques pour les tests de develop.
"""
import pytest

from flatcyl.develop import DevelopingMap, build_developing_map, slit_region
from flatcyl.metric_core import ConformalDensity, Domain, constant_density


@pytest.fixture(scope="module")
def euclidean_square() -> ConformalDensity:
    """rho = 1 sur le carré [-1, 1]^2, grille 64 x 64."""
    return constant_density(Domain.rectangle(-1.0, 1.0, -1.0, 1.0, 64))


@pytest.fixture(scope="module")
def annulus_dev(flat_annulus: ConformalDensity) -> DevelopingMap:
    """Application développante de 1/|z| sur la couronne fendue le long de R-, base 1.5."""
    region = slit_region(flat_annulus.domain)
    return build_developing_map(flat_annulus, region, 1.5 + 0j)
