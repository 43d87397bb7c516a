"""
Fixtures spécifiques pour les tests de metric_core.

Domaines de petite taille et densités en forme close ; les grilles
coûteuses sont dans le conftest racine.
"""
import pytest

from flatcyl.metric_core import ConformalDensity, Domain, constant_density


@pytest.fixture(scope="module")
def unit_square() -> Domain:
    """Carré unité, grille 64 x 64 centrée sur les cellules."""
    return Domain.rectangle(0.0, 1.0, 0.0, 1.0, 64)


@pytest.fixture(scope="module")
def unit_disc() -> Domain:
    """Disque unité, grille 32 x 32."""
    return Domain.disc(1.0, 32)


@pytest.fixture
def constant(unit_square: Domain):
    """Factory : densité constante c sur le carré unité."""
    def _constant(c: float = 1.0) -> ConformalDensity:
        return constant_density(unit_square, c)
    return _constant
