"""
Fixtures spécifiques pour les tests de beltrami.
"""
import numpy as np
import pytest

from flatcyl.beltrami import BeltramiField
from flatcyl.metric_core import Domain, MetricTensorField


@pytest.fixture(scope="module")
def square() -> Domain:
    """Carré [-1, 1]^2, grille 64 x 64."""
    return Domain.rectangle(-1.0, 1.0, -1.0, 1.0, 64)


@pytest.fixture(scope="module")
def radial_stretch() -> MetricTensorField:
    """
    A(z) = I + 3 u u^t avec u = z/|z| sur la couronne 0.5 < |z| < 1.

    Champ équivariant sous les rotations de centre 0, mu_A = 0.6 z / conj(z).
    """
    domain = Domain.annulus(0.5, 1.0, 32)

    def fn(z):
        u = z / np.abs(z)
        return 1 + 3 * u.real ** 2, 3 * u.real * u.imag, 1 + 3 * u.imag ** 2

    return MetricTensorField.from_function(domain, fn)


@pytest.fixture(scope="module")
def bump_field(square: Domain) -> BeltramiField:
    """Champ lisse de norme sup 0.5, nul (à 1e-4 près) au bord du carré."""
    def fn(z):
        return 0.5 * np.exp(-np.abs(z) ** 2 / 0.1) * np.exp(1j * np.real(z))

    return BeltramiField.from_function(square, fn)
