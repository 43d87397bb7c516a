"""
Tests de l'intégration des géodésiques et des géodésiques fermées.
"""
import numpy as np
import pytest

from flatcyl.errors import LeftDomain, PathTooShort
from flatcyl.geodesy import GeodesicPath, GeodesicState, closed_geodesic_check, integrate_geodesic
from flatcyl.metric_core import ConformalDensity, Domain, MoebiusMap, hyperbolic_disc_density


class TestIntegrateGeodesic:
    """z'' + 2 (d log rho) z'^2 = 0 à vitesse unitaire."""

    def test_straight_line_for_constant_density(self, euclidean: ConformalDensity):
        start = GeodesicState.unit(euclidean, -0.5 + 0.1j, 1)
        path = integrate_geodesic(euclidean, start, 1.0, step=1e-2)
        assert len(path.z) == 101
        assert abs(path.z[-1] - (0.5 + 0.1j)) < 1e-12
        assert np.max(np.abs(path.z.imag - 0.1)) < 1e-14, "Path must stay on the horizontal line"

    def test_hyperbolic_diameter(self, hyperbolic_disc: ConformalDensity):
        """Depuis 0 le long de l'axe réel : x(t) = tanh(t/2)."""
        # ============================================
        # GIVEN : Départ en 0, direction réelle
        # ============================================
        start = GeodesicState.unit(hyperbolic_disc, 0j, 1)

        # ============================================
        # WHEN : Intégration sur [0, 1]
        # ============================================
        path = integrate_geodesic(hyperbolic_disc, start, 1.0)

        # ============================================
        # THEN : Position exacte et vitesse unitaire
        # ============================================
        assert abs(path.z[-1] - np.tanh(0.5)) < 1e-8, f"End point {path.z[-1]} != tanh(1/2)"
        assert np.max(np.abs(path.z.imag)) < 1e-14
        assert path.speed_residual(hyperbolic_disc) < 1e-8
        assert not path.exited
        print(f"✅ Hyperbolic diameter reached {path.z[-1].real:.10f}")

    def test_hyperbolic_distance_along_diameter(self):
        """d(0, x) = log((1 + x) / (1 - x)) = t jusqu'à t = 3, soit x = tanh(3/2) ~ 0.905."""
        # ============================================
        # GIVEN : Disque de rayon 0.99 pour contenir tanh(3/2)
        # ============================================
        density = hyperbolic_disc_density(Domain.disc(0.99, 128))
        start = GeodesicState.unit(density, 0j, 1)

        # ============================================
        # WHEN : Intégration sur [0, 3]
        # ============================================
        path = integrate_geodesic(density, start, 3.0)

        # ============================================
        # THEN : Distance hyperbolique égale au temps écoulé
        # ============================================
        x = path.z.real
        distance = np.log((1 + x) / (1 - x))
        error = np.max(np.abs(distance - path.times))
        assert path.times[-1] == pytest.approx(3.0)
        assert error < 1e-6, f"Distance deviates from t by {error:.2e}"
        print(f"✅ Distance matches t up to {x[-1]:.6f}")

    @pytest.mark.parametrize("z0, direction, T", [(0.1 + 0.2j, np.exp(0.7j), 1.5), (-0.3j, 1 + 1j, 1.0)])
    def test_reversibility(self, hyperbolic_disc: ConformalDensity, z0, direction, T):
        """Aller sur [0, T], demi-tour, retour sur [0, T] : on revient au départ."""
        forward = integrate_geodesic(hyperbolic_disc, GeodesicState.unit(hyperbolic_disc, z0, direction), T)
        backward = integrate_geodesic(hyperbolic_disc, forward.end.reversed(), T)
        assert abs(backward.z[-1] - z0) < 1e-6, f"Returned to {backward.z[-1]} instead of {z0}"
        assert abs(backward.end.v + forward.state(0).v) < 1e-6

    def test_reversibility_on_flat_annulus(self, flat_annulus: ConformalDensity):
        start = GeodesicState.unit(flat_annulus, 1.2 + 0.5j, np.exp(0.4j))
        forward = integrate_geodesic(flat_annulus, start, 0.5, step=1e-2)
        backward = integrate_geodesic(flat_annulus, forward.end.reversed(), 0.5, step=1e-2)
        assert abs(backward.z[-1] - start.z) < 1e-6

    def test_unit_circle_on_flat_annulus(self, flat_annulus: ConformalDensity, unit_circle: GeodesicPath):
        assert np.max(np.abs(np.abs(unit_circle.z) - 1)) < 1e-8
        assert abs(unit_circle.z[-1] - np.exp(3j)) < 1e-7
        assert unit_circle.speed_residual(flat_annulus) < 1e-8

    def test_left_domain_raises_with_partial_path(self, hyperbolic_disc: ConformalDensity):
        start = GeodesicState.unit(hyperbolic_disc, 0j, 1)
        with pytest.raises(LeftDomain) as excinfo:
            integrate_geodesic(hyperbolic_disc, start, 5.0, step=1e-2)
        partial = excinfo.value.path
        assert partial.exited
        assert hyperbolic_disc.domain.contains(partial.z[-1])

    def test_stop_at_boundary(self, hyperbolic_disc: ConformalDensity):
        """tanh(t/2) atteint 0.9 en t = ln 19 ~ 2.94."""
        start = GeodesicState.unit(hyperbolic_disc, 0j, 1)
        path = integrate_geodesic(hyperbolic_disc, start, 5.0, step=1e-2, stop_at_boundary=True)
        assert path.exited
        assert path.duration == pytest.approx(2 * np.arctanh(0.9), abs=2e-2)

    def test_start_outside_domain(self, hyperbolic_disc: ConformalDensity):
        with pytest.raises(LeftDomain):
            integrate_geodesic(hyperbolic_disc, GeodesicState(0.95 + 0j, 1 + 0j), 1.0)


class TestClosedGeodesicCheck:
    """M(gamma(t)) = gamma(t + c)."""

    def test_rotation_shifts_unit_circle(self, flat_annulus: ConformalDensity, unit_circle: GeodesicPath):
        check = closed_geodesic_check(flat_annulus, MoebiusMap.rotation(1.0), unit_circle)
        assert check.is_invariant, f"Deviation {check.max_deviation:.2e}"
        assert check.c == pytest.approx(1.0, abs=1e-6)

    def test_dilation_shifts_radial_ray(self, flat_annulus: ConformalDensity, radial_ray: GeodesicPath):
        check = closed_geodesic_check(flat_annulus, MoebiusMap.dilation(np.exp(0.3)), radial_ray)
        assert check.is_invariant
        assert check.c == pytest.approx(0.3, abs=1e-6)

    def test_rotation_does_not_preserve_ray(self, flat_annulus: ConformalDensity, radial_ray: GeodesicPath):
        check = closed_geodesic_check(flat_annulus, MoebiusMap.rotation(0.5), radial_ray)
        assert not check.is_invariant
        assert check.max_deviation > 0.1

    def test_image_beyond_sampled_range(self, flat_annulus: ConformalDensity, radial_ray: GeodesicPath):
        """z -> e^2 z envoie le rayon au-delà de sa partie échantillonnée."""
        with pytest.raises(PathTooShort):
            closed_geodesic_check(flat_annulus, MoebiusMap.dilation(np.exp(2.0)), radial_ray)
