"""
Tests du solveur de Beltrami et de la densité récupérée.
"""
import numpy as np
import pytest

from flatcyl.beltrami import BeltramiField, GridMap, equation_mask, recover_density, solve_beltrami
from flatcyl.errors import (
    DegenerateJacobian,
    FieldShapeMismatch,
    InvalidNormalization,
    NearlyDegenerateField,
    SolverDiverged,
)
from flatcyl.metric_core import ConformalDensity, Domain, MetricTensorField


class TestSolveBeltrami:
    """dbar w = mu d w avec normalisation (z0, w0, direction)."""

    def test_zero_field_gives_translation(self, square: Domain):
        field = BeltramiField.from_function(square, lambda z: np.zeros(z.shape, dtype=complex))
        result = solve_beltrami(field, normalization=(0j, 0j, 1 + 0j))
        j, i = square.index_of(0j)
        expected = square.nodes - square.nodes[j, i]
        assert np.max(np.abs(result.w - expected)) < 1e-12, "mu = 0 must give an identity up to translation"
        assert result.iterations == 1

    def test_constant_field_gives_affine_map(self, square: Domain):
        """mu = 1/3 : w = z + conj(z)/3 à normalisation près."""
        # ============================================
        # GIVEN : Champ constant
        # ============================================
        field = BeltramiField.from_function(square, lambda z: np.full(z.shape, 1 / 3 + 0j))

        # ============================================
        # WHEN : Résolution
        # ============================================
        result = solve_beltrami(field)

        # ============================================
        # THEN : Application affine, dilatation mesurée 1/3
        # ============================================
        z = square.nodes
        j, i = square.index_of(0j)
        affine = z + np.conj(z) / 3
        expected = affine - affine[j, i]
        assert np.max(np.abs(result.w - expected)) < 1e-12
        assert np.max(np.abs(result.mu - 1 / 3)) < 1e-12
        assert result.finite_difference_residual(field) < 1e-10
        print("✅ Constant Beltrami field solved by an affine map")

    def test_variable_field_round_trip(self, bump_field: BeltramiField):
        """La dilatation mesurée par différences centrées reproduit mu à 1e-5 près."""
        # ============================================
        # WHEN : Résolution sur la grille 64 x 64
        # ============================================
        result = solve_beltrami(bump_field, tolerance=1e-8)

        # ============================================
        # THEN : Mesure indépendante par np.gradient
        # ============================================
        domain = bump_field.domain
        wy, wx = np.gradient(result.w, domain.h, edge_order=2)
        measured = (wx + 1j * wy) / (wx - 1j * wy)
        inner = equation_mask(domain)
        error = np.max(np.abs(measured - bump_field.mu)[inner])
        assert error < 1e-5, f"Measured dilation deviates by {error:.2e}"
        assert result.finite_difference_residual(bump_field) <= 1e-8
        assert np.all(result.jacobian[domain.mask] > 0), "Solution must preserve orientation"
        print(f"✅ Variable field solved in {result.iterations} iteration(s)")

    def test_default_tolerance_residual(self, bump_field: BeltramiField):
        result = solve_beltrami(bump_field)
        assert result.finite_difference_residual(bump_field) <= 1e-6
        assert result.residual <= 1e-6

    def test_normalization_outside_grid(self, bump_field: BeltramiField):
        with pytest.raises(InvalidNormalization):
            solve_beltrami(bump_field, normalization=(50 + 0j, 0j, 1 + 0j))
        with pytest.raises(InvalidNormalization):
            solve_beltrami(bump_field, normalization=(0j, 0j, 0j))

    def test_field_shape_mismatch(self, square: Domain):
        with pytest.raises(FieldShapeMismatch):
            BeltramiField(square, np.zeros((3, 3), dtype=complex))

    def test_normalization_is_applied(self, bump_field: BeltramiField):
        z0 = complex(bump_field.domain.xs[40], bump_field.domain.ys[20])
        result = solve_beltrami(bump_field, normalization=(z0, 1 + 1j, 1j), tolerance=1e-8)
        j, i = bump_field.domain.index_of(z0)
        assert result.w[j, i] == pytest.approx(1 + 1j, abs=1e-12)
        assert result.dz[j, i] == pytest.approx(1j, abs=1e-12)

    def test_nearly_degenerate_field_rejected(self, square: Domain):
        field = BeltramiField.from_function(square, lambda z: np.full(z.shape, 0.96 + 0j))
        with pytest.raises(NearlyDegenerateField):
            solve_beltrami(field)

    def test_iteration_budget_exhausted(self, bump_field: BeltramiField):
        with pytest.raises(SolverDiverged) as excinfo:
            solve_beltrami(bump_field, tolerance=1e-12, max_iters=1)
        assert excinfo.value.iterations == 1
        assert excinfo.value.residual > 1e-12


class TestGridMap:
    """Applications échantillonnées."""

    def test_orientation_reversing_map_rejected(self, square: Domain):
        with pytest.raises(DegenerateJacobian):
            GridMap.from_function(square, np.conj)

    def test_quadratic_map_derivatives(self):
        """Les différences centrées sont exactes pour z^2."""
        domain = Domain.annulus(0.5, 1.0, 64)
        w = GridMap.from_function(domain, lambda z: z ** 2)
        mask = domain.mask
        assert np.max(np.abs(w.dz - 2 * domain.nodes)[mask]) < 1e-10
        assert np.max(np.abs(w.dzbar)[mask]) < 1e-10


class TestRecoverDensity:
    """rho^2(w(z)) = sqrt(det A(z)) / det D w."""

    def test_scaled_identity_tensor(self, square: Domain):
        """A = 4 I, w = z : rho = 2."""
        A = MetricTensorField.constant(square, 4.0, 0.0, 4.0)
        density = recover_density(A, GridMap.from_function(square, lambda z: z))
        rho = np.exp(density.log_grid[density.support])
        assert density.support.any()
        assert np.max(np.abs(rho - 2.0)) < 1e-12, "Recovered density must be 2"

    def test_squaring_map(self):
        """A = I, w = z^2 : rho(w) = 1 / (2 sqrt|w|)."""
        # ============================================
        # GIVEN : Couronne 0.5 < |z| < 1 et w = z^2
        # ============================================
        domain = Domain.annulus(0.5, 1.0, 128)
        A = MetricTensorField.constant(domain, 1.0, 0.0, 1.0)
        w = GridMap.from_function(domain, lambda z: z ** 2)

        # ============================================
        # WHEN : Densité sur l'image
        # ============================================
        density = recover_density(A, w)

        # ============================================
        # THEN : Accord loin du trou central et du bord
        # ============================================
        nodes = density.domain.nodes
        modulus = np.abs(nodes)
        region = density.support & (modulus >= 0.3) & (modulus <= 0.95)
        expected = 1 / (2 * np.sqrt(modulus[region]))
        rho = np.exp(density.log_grid[region])
        error = np.max(np.abs(rho / expected - 1))
        assert region.any()
        assert error < 5e-3, f"Relative error {error:.2e} on the image annulus"

    def test_conformal_tensor_recovers_density(self, hyperbolic_disc: ConformalDensity):
        """A = rho^2 I : mu = 0, w translation, densité retrouvée à 2e-3 près."""
        domain = Domain.disc(0.9, 64)
        A = MetricTensorField.conformal(ConformalDensity(domain, rho_fn=hyperbolic_disc.rho))
        w = solve_beltrami(BeltramiField.from_tensor(A))
        shift = w.w[domain.index_of(0j)] - domain.nodes[domain.index_of(0j)]

        density = recover_density(A, w)
        nodes = density.domain.nodes
        source = nodes - shift
        region = density.support & (np.abs(source) <= 0.5)
        expected = hyperbolic_disc.rho(source[region])
        rho = np.exp(density.log_grid[region])
        error = np.max(np.abs(rho / expected - 1))
        assert error < 2e-3, f"Relative error {error:.2e}"
