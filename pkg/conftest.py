"""
Configuration globale et fixtures partagées pour tous les tests.

Les densités de référence (disque hyperbolique, couronne plate, bande
plate) sont construites une seule fois par session.
"""
import pytest
from pathlib import Path
from typing import Callable, List

from flatcyl.config import Config
from flatcyl.isogroup import PlaneIsometry
from flatcyl.loaders import InputLoader
from flatcyl.metric_core import (
    ConformalDensity,
    Domain,
    flat_annulus_density,
    flat_band_density,
    hyperbolic_disc_density,
)
from flatcyl.schemas import ClassificationReportSchema, JobConfigSchema


DATA_DIR = Path(__file__).parent / "data"


# ============================================================================
# Fixtures de configuration
# ============================================================================

@pytest.fixture(scope="session")
def config() -> Config:
    """Retourne la configuration globale."""
    return Config


@pytest.fixture(scope="session")
def data_dir() -> Path:
    """Répertoire des fichiers d'entrée livrés."""
    return DATA_DIR


@pytest.fixture(scope="session")
def loader(data_dir: Path) -> InputLoader:
    """Chargeur d'entrées résolvant les chemins relatifs dans data/."""
    return InputLoader(data_dir)


# ============================================================================
# Fixtures de densités
# ============================================================================

@pytest.fixture(scope="session")
def hyperbolic_disc() -> ConformalDensity:
    """rho = 2 / (1 - |z|^2) sur le disque de rayon 0.9, grille 128 x 128."""
    return hyperbolic_disc_density(Domain.disc(0.9, 128))


@pytest.fixture(scope="session")
def flat_annulus() -> ConformalDensity:
    """rho = 1 / |z| sur la couronne 0.8 < |z| < 3, grille 128 x 128."""
    return flat_annulus_density(Domain.annulus(0.8, 3.0, 128))


@pytest.fixture(scope="session")
def flat_band() -> ConformalDensity:
    """Densité hyperbolique aplatie sur |Re z| <= 0.2, disque de rayon 0.95."""
    return flat_band_density(Domain.disc(0.95, 128))


# ============================================================================
# Fixtures utilitaires
# ============================================================================

@pytest.fixture(scope="session")
def make_generators() -> Callable[..., List[PlaneIsometry]]:
    """
    Factory fixture pour construire des générateurs.

    Usage:
        def test_something(make_generators):
            gens = make_generators(("rot", "1/4"), ("trans", 1))

    Returns:
        Fonction de construction
    """
    def _make(*specs) -> List[PlaneIsometry]:
        out = []
        for kind, value in specs:
            if kind == "rot":
                out.append(PlaneIsometry.rotation(value))
            else:
                out.append(PlaneIsometry.translation(complex(value)))
        return out

    return _make


# ============================================================================
# Fixtures pour les schémas de validation
# ============================================================================

@pytest.fixture(scope="session")
def job_config_schema() -> JobConfigSchema:
    """Schéma de validation des configurations de job."""
    return JobConfigSchema()


@pytest.fixture(scope="session")
def classification_report_schema() -> ClassificationReportSchema:
    """Schéma de sérialisation des rapports de classification."""
    return ClassificationReportSchema()
