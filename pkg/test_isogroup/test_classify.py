"""
Tests de la classification en sept cas et des familles exceptionnelles.
"""
from fractions import Fraction

import numpy as np
import pytest

from flatcyl.errors import BadParameters
from flatcyl.isogroup import (
    EXCEPTIONAL_FAMILIES,
    PlaneIsometry,
    classify,
    exceptional_constructors,
)


class TestClassify:
    """Un exemple par cas."""

    def test_dense_plane_is_minimal(self, make_generators):
        generators = make_generators(("trans", 1), ("trans", np.sqrt(2)), ("trans", 1j), ("trans", 1j * np.sqrt(3)))
        description = classify(generators)
        assert description.case == "Minimal"
        assert description.case_number == 1

    def test_fifth_turn_and_translation_is_minimal(self, make_generators):
        """Z[e^(2 i pi / 5)] est dense : z -> e^(2 i pi / 5) z et z -> z + 1 engendrent un groupe minimal."""
        description = classify(make_generators(("rot", "1/5"), ("trans", 1)))
        assert description.case == "Minimal", f"Got {description.case}"
        assert description.case_number == 1
        assert description.parameters["dense"] == "plane"

    def test_irrational_rotation(self):
        description = classify([PlaneIsometry.rotation_by_angle(1.0)])
        assert description.case == "RotationMinimal"
        assert description.case_number == 2
        assert description.confidence == "numerical"

    def test_finite_rotation_about_a_point(self):
        """Rotation d'ordre 5 de centre 1 + i : le conjugateur ramène le centre en 0."""
        description = classify([PlaneIsometry.rotation("1/5", center=1 + 1j)])
        assert description.case == "FiniteRotation"
        assert description.parameters["order"] == 5
        assert abs(description.conjugator(1 + 1j)) < 1e-12

    def test_dense_line(self, make_generators):
        description = classify(make_generators(("trans", 1), ("trans", np.sqrt(2))))
        assert description.case == "LineMinimal"
        assert description.case_number == 4

    def test_cylinder(self, make_generators):
        description = classify(make_generators(("trans", 2)))
        assert description.case == "Z"
        assert description.case_number == 5
        assert description.parameters["alpha"] == pytest.approx(2.0)

    def test_torus(self, make_generators):
        description = classify(make_generators(("trans", 1), ("trans", 1j)))
        assert description.case == "Z2"
        assert description.parameters["alpha"] == pytest.approx(1.0)
        assert description.parameters["a"] == pytest.approx(1j)

    @pytest.mark.parametrize("specs, family", [
        ((("rot", "1/6"), ("trans", 1)), "Lambda0"),
        ((("rot", "1/3"), ("trans", 1)), "Lambda1"),
        ((("rot", "1/4"), ("trans", 1)), "Z2i"),
        ((("rot", "1/2"), ("trans", 1)), "Zminus"),
        ((("rot", "1/2"), ("trans", 1), ("trans", 0.3 + 1.2j)), "Z2minus"),
    ])
    def test_exceptional_families(self, make_generators, specs, family):
        # ============================================
        # WHEN : Classification des générateurs
        # ============================================
        description = classify(make_generators(*specs))

        # ============================================
        # THEN : Cas 7 et bonne famille
        # ============================================
        assert description.case == "Exceptional", f"{family}: got case {description.case}"
        assert description.case_number == 7
        assert description.label == family
        assert description.parameters["alpha"] == pytest.approx(1.0)
        assert description.confidence == "exact"
        print(f"✅ {family} recognised with evidence {description.evidence}")

    def test_conjugated_zminus(self):
        """Demi-tour de centre 2 + i et translation 3i : Zminus, axe vertical."""
        generators = [PlaneIsometry.rotation("1/2", center=2 + 1j), PlaneIsometry.translation(3j)]
        description = classify(generators)
        assert description.label == "Zminus"
        assert description.parameters["alpha"] == pytest.approx(3.0)
        L = description.conjugator
        assert abs(L(2 + 1j)) < 1e-12, "Rotation centre must be sent to 0"
        moved = L.compose(PlaneIsometry.translation(3j)).compose(L.inverse())
        assert moved.a == pytest.approx(3.0) or moved.a == pytest.approx(-3.0)

    def test_numerical_rotation_is_snapped(self):
        """Un quart de tour donné en flottants est reconnu comme Z2i."""
        generators = [PlaneIsometry(lam=np.exp(0.5j * np.pi)), PlaneIsometry.translation(1)]
        description = classify(generators)
        assert description.label == "Z2i"
        assert description.confidence == "numerical"


class TestExceptionalConstructors:
    """Générateurs canoniques des familles exceptionnelles."""

    @pytest.mark.parametrize("family", EXCEPTIONAL_FAMILIES)
    def test_round_trip(self, family):
        a = 0.4 + 2j if family == "Z2minus" else None
        description = classify(exceptional_constructors(family, 1.5, a))
        assert description.label == family
        assert description.parameters["alpha"] == pytest.approx(1.5)

    def test_bad_parameters(self):
        with pytest.raises(BadParameters):
            exceptional_constructors("Klein", 1.0)
        with pytest.raises(BadParameters):
            exceptional_constructors("Z2i", 0.0)
        with pytest.raises(BadParameters):
            exceptional_constructors("Z2minus", 1.0)
        with pytest.raises(BadParameters):
            exceptional_constructors("Z2minus", 1.0, a=0.5 - 1j)

    @pytest.mark.parametrize("family", EXCEPTIONAL_FAMILIES)
    def test_random_parameters(self, family):
        """Dix tirages (alpha, a) par famille, a réduit : 0 < alpha < |a|, |Re a| < alpha/2."""
        rng = np.random.default_rng(EXCEPTIONAL_FAMILIES.index(family))
        for _ in range(10):
            alpha = rng.uniform(0.3, 3.0)
            a = None
            if family == "Z2minus":
                a = complex(alpha * rng.uniform(-0.45, 0.45), alpha * rng.uniform(1.05, 2.5))
            description = classify(exceptional_constructors(family, alpha, a))
            assert description.label == family, f"alpha={alpha}, a={a}: got {description.label}"
            assert description.parameters["alpha"] == pytest.approx(alpha, rel=1e-9)
            if family == "Z2minus":
                assert abs(description.parameters["a"] - a) <= 1e-9 * alpha, (
                    f"a={a} recovered as {description.parameters['a']}"
                )


class TestConjugationInvariance:
    """Le cas et les paramètres ne dépendent pas du repère."""

    @pytest.mark.parametrize("specs", [
        (("trans", 2),),
        (("trans", 1), ("trans", 0.3 + 1.2j)),
        (("rot", "1/5"),),
        (("rot", "1/6"), ("trans", 1)),
        (("rot", "1/3"), ("trans", 1)),
        (("rot", "1/4"), ("trans", 1)),
        (("rot", "1/2"), ("trans", 1)),
        (("rot", "1/2"), ("trans", 1), ("trans", 0.3 + 1.2j)),
    ])
    def test_conjugated_generators(self, make_generators, specs):
        # ============================================
        # GIVEN : Groupe de référence et conjugués par des isométries tirées au hasard
        # ============================================
        generators = make_generators(*specs)
        reference = classify(generators)
        rng = np.random.default_rng(len(specs))

        for _ in range(5):
            T = PlaneIsometry.rotation(Fraction(int(rng.integers(12)), 12), center=complex(*rng.normal(size=2)))
            T = T.compose(PlaneIsometry.translation(complex(*rng.normal(size=2))))

            # ============================================
            # WHEN : Classification de T g T^-1
            # ============================================
            description = classify([T.conjugate(g) for g in generators])

            # ============================================
            # THEN : Même cas, mêmes paramètres
            # ============================================
            assert description.label == reference.label, f"{T}: {description.label} != {reference.label}"
            for key in ("alpha", "a", "order"):
                if key in reference.parameters:
                    assert abs(description.parameters[key] - reference.parameters[key]) < 1e-9, (
                        f"{key} changed under {T}: {description.parameters[key]} vs {reference.parameters[key]}"
                    )
        print(f"✅ {reference.label} is invariant under conjugation")
