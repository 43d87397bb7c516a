"""
Exceptions du pipeline.

Chaque module possède sa propre classe intermédiaire ; le nom de la classe
concrète et l'attribut ``module`` sont repris tels quels dans les rapports
d'échec de la CLI.
"""
from typing import Any, Optional


class FlatCylinderError(Exception):
    """Exception racine de toutes les erreurs numériques du pipeline."""
    module = "flatcyl"


# ============================================================================
# metric_core
# ============================================================================

class MetricError(FlatCylinderError):
    """Erreur levée par metric_core."""
    module = "metric_core"


class InvalidDomain(MetricError):
    """Paramètres de domaine ou de grille invalides."""
    pass


class StencilOutOfDomain(MetricError):
    """Le stencil de différences finies sort du domaine."""
    pass


class NonPositiveDensity(MetricError):
    """Une densité conforme est nulle, négative ou non finie."""
    pass


class MapsOutsideDomain(MetricError):
    """Une transformation de Möbius envoie un échantillon hors du domaine."""
    pass


class NotPositiveDefinite(MetricError):
    """Un champ de tenseurs n'est pas défini positif."""
    pass


# ============================================================================
# beltrami
# ============================================================================

class BeltramiError(FlatCylinderError):
    """Erreur levée par beltrami."""
    module = "beltrami"


class SingularMap(BeltramiError):
    """Application linéaire de déterminant nul."""
    pass


class DegenerateDilation(BeltramiError):
    """Application anti-conforme pure (a = 0)."""
    pass


class DilationNotStrictlyBounded(BeltramiError):
    """Dilatation complexe de module >= 1."""
    pass


class NearlyDegenerateField(BeltramiError):
    """Champ de Beltrami trop proche du disque unité pour le solveur."""
    pass


class SolverDiverged(BeltramiError):
    """Le résidu cible n'est pas atteint dans le budget d'itérations."""

    def __init__(self, message: str, residual: float = float("nan"), iterations: int = 0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class DegenerateJacobian(BeltramiError):
    """Jacobien nul ou négatif sur un noeud intérieur."""
    pass


class FieldShapeMismatch(BeltramiError):
    """Échantillons de mu incompatibles avec la grille du domaine."""
    pass


class InvalidNormalization(BeltramiError):
    """Point de normalisation hors de la grille ou direction nulle."""
    pass


# ============================================================================
# isogroup
# ============================================================================

class IsometryGroupError(FlatCylinderError):
    """Erreur levée par isogroup."""
    module = "isogroup"


class InvalidIsometry(IsometryGroupError):
    """|lambda| s'écarte de 1."""
    pass


class InconclusiveBudget(IsometryGroupError):
    """L'énumération des mots ne se stabilise pas."""

    def __init__(self, message: str, word_bound: Optional[int] = None):
        super().__init__(message)
        self.word_bound = word_bound


class NotCrystallographic(IsometryGroupError):
    """La rotation ne préserve pas le réseau."""
    pass


class BadParameters(IsometryGroupError):
    """Paramètres invalides pour une famille exceptionnelle."""
    pass


# ============================================================================
# geodesy
# ============================================================================

class GeodesyError(FlatCylinderError):
    """Erreur levée par geodesy."""
    module = "geodesy"


class LeftDomain(GeodesyError):
    """La géodésique sort du domaine ; le chemin partiel est conservé."""

    def __init__(self, message: str, path: Any = None):
        super().__init__(message)
        self.path = path


class StepTooLarge(GeodesyError):
    """Dérive d'énergie trop forte par unité de temps."""
    pass


class PathTooShort(GeodesyError):
    """Le chemin ne couvre pas son image par la transformation."""
    pass


class GridTooCoarse(GeodesyError):
    """La distance de graphe s'écarte trop de l'estimation raffinée."""
    pass


class NotFlat(GeodesyError):
    """Courbure non nulle dans la région enclose ; ``witness`` la localise."""

    def __init__(self, message: str, witness: Optional[complex] = None, curvature: float = float("nan")):
        super().__init__(message)
        self.witness = witness
        self.curvature = curvature


class NotParallel(GeodesyError):
    """Les deux géodésiques ne restent pas à distance constante."""
    pass


# ============================================================================
# develop
# ============================================================================

class DevelopError(FlatCylinderError):
    """Erreur levée par develop."""
    module = "develop"


class NotHarmonic(DevelopError):
    """log rho n'est pas harmonique sur la région."""
    pass


class NotSimplyConnected(DevelopError):
    """L'intégration dépend du chemin."""
    pass


class InsufficientOverlap(DevelopError):
    """Trop peu d'échantillons z avec M(z) dans la région."""
    pass


class NotIsometric(DevelopError):
    """La similitude ajustée n'est pas une isométrie."""
    pass


class NotEquivariant(DevelopError):
    """La densité n'est pas invariante par la transformation de revêtement."""
    pass


# ============================================================================
# count
# ============================================================================

class CountError(FlatCylinderError):
    """Erreur levée par count."""
    module = "count"


class BadLattice(CountError):
    """Réseau invalide (alpha <= 0 ou Im a <= 0)."""
    pass


class BoundTooLarge(CountError):
    """L'énumération dépasserait la borne de garde."""
    pass


class NoComplement(CountError):
    """Le complémentaire de l'image développée est d'intérieur vide."""
    pass


class CaseNotCountable(CountError):
    """Les cas 1 à 4 ne se comptent pas."""
    pass


# ============================================================================
# cli
# ============================================================================

class JobConfigError(FlatCylinderError):
    """Configuration de job invalide (code de sortie 1)."""
    module = "cli"
