"""
Fixtures spécifiques pour les tests de geodesy.
"""
import numpy as np
import pytest

from flatcyl.geodesy import GeodesicPath, GeodesicState, integrate_geodesic
from flatcyl.metric_core import ConformalDensity, Domain, constant_density


@pytest.fixture(scope="module")
def euclidean() -> ConformalDensity:
    """rho = 1 sur le carré [-1, 1]^2, grille 64 x 64."""
    return constant_density(Domain.rectangle(-1.0, 1.0, -1.0, 1.0, 64))


@pytest.fixture(scope="module")
def unit_circle(flat_annulus: ConformalDensity) -> GeodesicPath:
    """Cercle |z| = 1 parcouru à vitesse unitaire sur [0, 3]."""
    start = GeodesicState.unit(flat_annulus, 1 + 0j, 1j)
    return integrate_geodesic(flat_annulus, start, 3.0, step=1e-2)


@pytest.fixture(scope="module")
def radial_ray(flat_annulus: ConformalDensity) -> GeodesicPath:
    """Rayon z = e^t sur [0, 1]."""
    start = GeodesicState.unit(flat_annulus, 1 + 0j, 1)
    return integrate_geodesic(flat_annulus, start, 1.0, step=1e-2)


@pytest.fixture(scope="module")
def annulus_pair(flat_annulus: ConformalDensity):
    """Arcs des cercles |z| = 1 (angles 0..1) et |z| = e (angles -0.3..1.3)."""
    inner = integrate_geodesic(flat_annulus, GeodesicState.unit(flat_annulus, 1 + 0j, 1j), 1.0, step=1e-2)
    rotation = np.exp(-0.3j)
    outer_start = GeodesicState.unit(flat_annulus, np.e * rotation, 1j * rotation)
    outer = integrate_geodesic(flat_annulus, outer_start, 1.6, step=1e-2)
    return inner, outer
