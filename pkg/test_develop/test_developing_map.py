"""
Tests de l'harmonicité, du conjugué harmonique et de l'application développante.
"""
import numpy as np
import pytest

from flatcyl.develop import (
    DevelopingMap,
    build_developing_map,
    harmonic_conjugate,
    harmonicity_check,
    slit_region,
)
from flatcyl.errors import NotHarmonic, NotSimplyConnected
from flatcyl.metric_core import ConformalDensity, Domain


class TestHarmonicity:
    """max |Delta log rho| sur la région."""

    def test_flat_annulus_is_harmonic(self, flat_annulus: ConformalDensity):
        check = harmonicity_check(flat_annulus)
        assert check.passed, f"max |Delta log rho| = {check.max_laplacian:.2e} > {check.tol:.2e}"

    def test_hyperbolic_is_not_harmonic(self, hyperbolic_disc: ConformalDensity):
        """Delta log rho = rho^2 >= 4 pour la densité hyperbolique."""
        check = harmonicity_check(hyperbolic_disc, tol=1e-3)
        assert not check.passed
        assert check.max_laplacian > 4.0


class TestHarmonicConjugate:
    """psi_x = -(log rho)_y, psi_y = (log rho)_x."""

    def test_conjugate_of_real_part(self):
        """log rho = Re z donne psi = Im z - Im z0."""
        domain = Domain.rectangle(-1.0, 1.0, -1.0, 1.0, 32)
        density = ConformalDensity(
            domain,
            rho_fn=lambda z: np.exp(np.real(z)),
            grad_log_fn=lambda z: (np.ones(np.shape(z)), np.zeros(np.shape(z))),
        )
        conj = harmonic_conjugate(density, domain.mask, 0.2 + 0.1j)
        j, i = domain.index_of(0.2 + 0.1j)
        expected = domain.nodes.imag - domain.nodes.imag[j, i]
        assert np.max(np.abs(conj.psi - expected)) < 1e-12
        assert conj.residual < 1e-12

    def test_unslit_annulus_not_simply_connected(self, flat_annulus: ConformalDensity):
        """Sans fente, psi = -theta présente un saut de 2 pi."""
        with pytest.raises(NotSimplyConnected):
            harmonic_conjugate(flat_annulus, flat_annulus.domain.mask, 1.5 + 0j)

    def test_base_point_outside_region(self, flat_annulus: ConformalDensity):
        with pytest.raises(NotSimplyConnected):
            harmonic_conjugate(flat_annulus, slit_region(flat_annulus.domain), 0j)


class TestDevelopingMap:
    """h(z0) = 0, h'(z0) > 0."""

    def test_euclidean_map_is_translation(self, euclidean_square: ConformalDensity):
        domain = euclidean_square.domain
        dev = build_developing_map(euclidean_square, domain.mask, 0j)
        assert np.max(np.abs(dev.values - (domain.nodes - dev.z0))) < 1e-12
        assert dev.cr_residual < 1e-12

    def test_flat_annulus_develops_to_logarithm(self, annulus_dev: DevelopingMap):
        """h(z) = e^(i theta0) (log z - log z0) sur la couronne fendue."""
        # ============================================
        # GIVEN : Couronne 1 <= |z| <= 2.5 de la région fendue
        # ============================================
        nodes = annulus_dev.domain.nodes
        r = np.abs(nodes)
        band = annulus_dev.region & (r >= 1.0) & (r <= 2.5)

        # ============================================
        # WHEN : Comparaison au logarithme principal
        # ============================================
        z0 = annulus_dev.z0
        expected = np.exp(1j * np.angle(z0)) * (np.log(nodes[band]) - np.log(z0))
        error = np.max(np.abs(annulus_dev.values[band] - expected))

        # ============================================
        # THEN : Accord à 1e-4 et normalisation respectée
        # ============================================
        assert error < 1e-4, f"Max deviation {error:.2e} from the logarithm"
        j, i = annulus_dev.domain.index_of(z0)
        assert annulus_dev.values[j, i] == 0
        assert abs(annulus_dev.derivative[j, i].imag) < 1e-12
        assert annulus_dev.derivative[j, i].real > 0
        print(f"✅ Flat annulus developed with max error {error:.2e}")

    def test_evaluate_between_nodes(self, annulus_dev: DevelopingMap):
        z = np.array([1.23 + 0.41j, -0.7 + 1.9j])
        z0 = annulus_dev.z0
        expected = np.exp(1j * np.angle(z0)) * (np.log(z) - np.log(z0))
        assert np.max(np.abs(annulus_dev.evaluate(z) - expected)) < 1e-4

    def test_curved_density_not_harmonic(self, hyperbolic_disc: ConformalDensity):
        with pytest.raises(NotHarmonic):
            build_developing_map(hyperbolic_disc, hyperbolic_disc.domain.mask, 0j)
