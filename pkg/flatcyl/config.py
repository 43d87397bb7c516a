"""
Configuration du pipeline de cylindres plats.

Configuration centralisée qui charge les paramètres numériques
depuis les variables d'environnement (.env file).
"""
import os
from dotenv import load_dotenv

# Charger les variables d'environnement
load_dotenv()


class Config:
    """Configuration centralisée pour le pipeline."""

    # Grilles
    GRID_SIZE: int = int(os.getenv("FLATCYL_GRID_SIZE", "128"))
    DIFF_STEP: float = float(os.getenv("FLATCYL_DIFF_STEP", "1e-5"))

    # Solveur de Beltrami
    SOLVER_TOLERANCE: float = float(os.getenv("FLATCYL_SOLVER_TOLERANCE", "1e-6"))
    # 0 signifie budget automatique : 10 * sqrt(nombre d'inconnues)
    SOLVER_MAX_ITERS: int = int(os.getenv("FLATCYL_SOLVER_MAX_ITERS", "0"))
    DEGENERACY_GUARD: float = float(os.getenv("FLATCYL_DEGENERACY_GUARD", "0.05"))

    # Groupes d'isométries
    WORD_BOUND: int = int(os.getenv("FLATCYL_WORD_BOUND", "8"))
    DISCRETENESS_TOL: float = float(os.getenv("FLATCYL_DISCRETENESS_TOL", "1e-9"))
    ROTATION_TOL: float = float(os.getenv("FLATCYL_ROTATION_TOL", "1e-9"))
    MAX_DENOMINATOR: int = int(os.getenv("FLATCYL_MAX_DENOMINATOR", "1000000"))

    # Géodésiques et bandes plates
    GEODESIC_STEP: float = float(os.getenv("FLATCYL_GEODESIC_STEP", "1e-3"))
    SPEED_TOL: float = float(os.getenv("FLATCYL_SPEED_TOL", "1e-8"))
    DRIFT_LIMIT: float = float(os.getenv("FLATCYL_DRIFT_LIMIT", "1e-5"))
    STRIP_PARALLEL_TOL: float = float(os.getenv("FLATCYL_STRIP_PARALLEL_TOL", "2e-2"))
    GRID_TOO_COARSE: float = float(os.getenv("FLATCYL_GRID_TOO_COARSE", "0.05"))

    # Application développante
    PATH_TOL: float = float(os.getenv("FLATCYL_PATH_TOL", "1e-6"))
    EQUIVARIANCE_TOL: float = float(os.getenv("FLATCYL_EQUIVARIANCE_TOL", "1e-3"))

    # Sorties
    OUTPUT_DIR: str = os.getenv("FLATCYL_OUTPUT_DIR", "out")
    LOG_LEVEL: str = os.getenv("FLATCYL_LOG_LEVEL", "INFO")

    @classmethod
    def validate(cls) -> None:
        """Valide que les paramètres numériques sont cohérents."""
        positives = {
            "FLATCYL_DIFF_STEP": cls.DIFF_STEP,
            "FLATCYL_SOLVER_TOLERANCE": cls.SOLVER_TOLERANCE,
            "FLATCYL_DEGENERACY_GUARD": cls.DEGENERACY_GUARD,
            "FLATCYL_DISCRETENESS_TOL": cls.DISCRETENESS_TOL,
            "FLATCYL_ROTATION_TOL": cls.ROTATION_TOL,
            "FLATCYL_GEODESIC_STEP": cls.GEODESIC_STEP,
            "FLATCYL_SPEED_TOL": cls.SPEED_TOL,
            "FLATCYL_DRIFT_LIMIT": cls.DRIFT_LIMIT,
            "FLATCYL_STRIP_PARALLEL_TOL": cls.STRIP_PARALLEL_TOL,
            "FLATCYL_GRID_TOO_COARSE": cls.GRID_TOO_COARSE,
            "FLATCYL_PATH_TOL": cls.PATH_TOL,
            "FLATCYL_EQUIVARIANCE_TOL": cls.EQUIVARIANCE_TOL,
        }
        for name, value in positives.items():
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if cls.GRID_SIZE < 8:
            raise ValueError(f"FLATCYL_GRID_SIZE must be >= 8, got {cls.GRID_SIZE}")
        if cls.WORD_BOUND < 4:
            raise ValueError(f"FLATCYL_WORD_BOUND must be >= 4, got {cls.WORD_BOUND}")
        if cls.SOLVER_MAX_ITERS < 0:
            raise ValueError("FLATCYL_SOLVER_MAX_ITERS must be >= 0")
        if not 0 < cls.DEGENERACY_GUARD < 1:
            raise ValueError("FLATCYL_DEGENERACY_GUARD must lie in (0, 1)")


# Valider la configuration au chargement
Config.validate()
