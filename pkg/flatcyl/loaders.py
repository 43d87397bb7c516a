"""
Chargement et validation des fichiers d'entrée.

Système générique de chargement des métriques (JSON + CSV), des champs de
tenseurs, des générateurs d'isométries, des transformations de revêtement
et des configurations de job, avec cache par chemin.
"""
import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
from marshmallow import ValidationError

from .config import Config
from .errors import InvalidDomain, InvalidIsometry, JobConfigError
from .isogroup import PlaneIsometry
from .metric_core import (
    ConformalDensity,
    Domain,
    MetricTensorField,
    MoebiusMap,
    constant_density,
    expression_density,
    flat_annulus_density,
    flat_band_density,
    grid_density,
    hyperbolic_disc_density,
    upper_half_plane_density,
)
from .schemas import JobConfigSchema, MetricDefinitionSchema

PathLike = Union[str, Path]


def build_domain(block: Dict[str, Any], n: Optional[int] = None) -> Domain:
    """
    Construit un Domain à partir d'un bloc ``domain`` validé.

    Args:
        block: Bloc validé par DomainSchema
        n: Taille de grille imposée (prioritaire sur block["n"])
    """
    n = n or block.get("n") or Config.GRID_SIZE
    kind = block["kind"]
    if kind == "disc":
        return Domain.disc(block["radius"], n, block.get("center", 0j))
    if kind == "annulus":
        return Domain.annulus(block["inner"], block["outer"], n)
    if kind == "rectangle-grid":
        return Domain.rectangle(block["x_min"], block["x_max"], block["y_min"], block["y_max"], n)
    return Domain.upper_half_plane(block["x_min"], block["x_max"], block["y_min"], block["y_max"], n)


def _catalogue_density(name: str, domain: Domain, value: Optional[float]) -> ConformalDensity:
    if name == "constant":
        return constant_density(domain, 1.0 if value is None else value)
    if name == "flat-band":
        return flat_band_density(domain) if value is None else flat_band_density(domain, half_width=value)
    return {
        "hyperbolic-disc": hyperbolic_disc_density,
        "upper-half-plane": upper_half_plane_density,
        "flat-annulus": flat_annulus_density,
    }[name](domain)


def _tokens(path: Path) -> List[List[str]]:
    """Lignes non vides, sans commentaires '#', découpées en mots."""
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        for raw in f:
            line = raw.split("#", 1)[0].strip()
            if line:
                rows.append(line.split())
    return rows


def parse_generator_line(words: List[str]) -> PlaneIsometry:
    """
    Une ligne de fichier de générateurs.

    Formats acceptés :
        ``lambda_re lambda_im a_re a_im``
        ``rot k/n [a_re a_im]``
        ``trans a_re a_im``

    Raises:
        InvalidIsometry: Ligne mal formée ou |lambda| != 1
    """
    try:
        head = words[0].lower()
        if head == "rot":
            a = complex(float(words[2]), float(words[3])) if len(words) == 4 else 0j
            if len(words) not in (2, 4):
                raise ValueError("expected 'rot k/n [a_re a_im]'")
            return PlaneIsometry(a=a, turns=Fraction(words[1]))
        if head == "trans":
            if len(words) != 3:
                raise ValueError("expected 'trans a_re a_im'")
            return PlaneIsometry.translation(complex(float(words[1]), float(words[2])))
        if len(words) != 4:
            raise ValueError("expected 'lambda_re lambda_im a_re a_im'")
        values = [float(w) for w in words]
        return PlaneIsometry(lam=complex(values[0], values[1]), a=complex(values[2], values[3]))
    except (ValueError, ZeroDivisionError, IndexError) as e:
        raise InvalidIsometry(f"Cannot parse generator line {' '.join(words)!r}: {e}")


def parse_deck_line(words: List[str]) -> MoebiusMap:
    """
    Une ligne de fichier de transformations de revêtement.

    Formats acceptés :
        ``mobius a_re a_im b_re b_im c_re c_im d_re d_im``
        ``rotate k/n``
        ``translate x y``
        ``dilate r``
    """
    head = words[0].lower()
    try:
        if head == "mobius" and len(words) == 9:
            v = [float(w) for w in words[1:]]
            return MoebiusMap(complex(v[0], v[1]), complex(v[2], v[3]), complex(v[4], v[5]), complex(v[6], v[7]))
        if head == "rotate" and len(words) == 2:
            return MoebiusMap.rotation(2 * np.pi * float(Fraction(words[1])))
        if head == "translate" and len(words) == 3:
            return MoebiusMap.translation(complex(float(words[1]), float(words[2])))
        if head == "dilate" and len(words) == 2:
            return MoebiusMap.dilation(float(words[1]))
    except (ValueError, ZeroDivisionError) as e:
        raise JobConfigError(f"Cannot parse deck line {' '.join(words)!r}: {e}")
    raise JobConfigError(f"Unknown deck line {' '.join(words)!r}")


class InputLoader:
    """Chargeur de fichiers d'entrée avec validation et cache."""

    def __init__(self, data_dir: Optional[Path] = None):
        """
        Initialise le chargeur.

        Args:
            data_dir: Répertoire de résolution des chemins relatifs
                      (par défaut: data/ relatif au package)
        """
        if data_dir is None:
            data_dir = Path(__file__).parent.parent / "data"
        self.data_dir = Path(data_dir)
        self._metrics: Dict[tuple, ConformalDensity] = {}
        self._generators: Dict[Path, List[PlaneIsometry]] = {}

    def resolve(self, path: PathLike, base: Optional[Path] = None) -> Path:
        """Chemin absolu : tel quel s'il existe, sinon relatif à ``base`` puis à data_dir."""
        path = Path(path)
        if path.is_absolute() or path.exists():
            return path
        for root in (base, self.data_dir):
            if root is not None and (root / path).exists():
                return root / path
        return path

    def _require(self, path: PathLike, what: str) -> Path:
        resolved = self.resolve(path)
        if not resolved.exists():
            raise FileNotFoundError(f"{what} not found at {resolved}")
        return resolved

    def load_metric(self, path: PathLike, grid_size: Optional[int] = None) -> ConformalDensity:
        """
        Charge une définition de métrique JSON.

        Returns:
            ConformalDensity (formule, catalogue ou grille de log rho)

        Raises:
            FileNotFoundError: Si le fichier (ou la grille CSV) n'existe pas
            ValidationError: Si la définition est invalide
        """
        resolved = self._require(path, "Metric definition")
        key = (resolved, grid_size)
        if key in self._metrics:
            return self._metrics[key]

        with open(resolved, "r", encoding="utf-8") as f:
            raw = json.load(f)
        try:
            definition = MetricDefinitionSchema().load(raw)
        except ValidationError as e:
            raise ValidationError(f"Validation error in metric {resolved.name}: {e.messages}")

        kind = definition["kind"]
        if kind == "grid":
            header = definition["header"]
            csv_path = self.resolve(definition["path"], base=resolved.parent)
            if not csv_path.exists():
                raise FileNotFoundError(f"Metric grid not found at {csv_path}")
            log_values = np.loadtxt(csv_path, delimiter=",", ndmin=2)
            if log_values.shape != (header["ny"], header["nx"]):
                raise InvalidDomain(f"Grid {csv_path.name} has shape {log_values.shape}, "
                                    f"header says {(header['ny'], header['nx'])}")
            domain = Domain.from_header(header["nx"], header["ny"], header["x0"], header["y0"], header["h"])
            density = grid_density(domain, log_values, label=resolved.stem)
        else:
            domain = build_domain(definition["domain"], grid_size)
            if kind == "expression":
                density = expression_density(domain, definition["formula"])
            else:
                density = _catalogue_density(definition["name"], domain, definition.get("value"))

        self._metrics[key] = density
        return density

    def load_tensor(self, path: PathLike) -> MetricTensorField:
        """
        Charge un champ de tenseurs CSV ``x,y,E,F,G`` sur une grille régulière.

        Raises:
            InvalidDomain: Si les points ne forment pas une grille régulière complète
        """
        resolved = self._require(path, "Tensor field")
        table = np.loadtxt(resolved, delimiter=",", skiprows=1, ndmin=2)
        if table.shape[1] != 5:
            raise InvalidDomain(f"Tensor file {resolved.name} must have columns x,y,E,F,G")
        xs = np.unique(table[:, 0])
        ys = np.unique(table[:, 1])
        if len(xs) * len(ys) != len(table):
            raise InvalidDomain(f"Tensor file {resolved.name} is not a complete grid")
        h = float(xs[1] - xs[0])
        if not (np.allclose(np.diff(xs), h, rtol=1e-6) and np.allclose(np.diff(ys), h, rtol=1e-6)):
            raise InvalidDomain(f"Tensor file {resolved.name} must use one uniform spacing")
        domain = Domain.from_header(len(xs), len(ys), xs[0], ys[0], h)
        i = np.rint((table[:, 0] - xs[0]) / h).astype(int)
        j = np.rint((table[:, 1] - ys[0]) / h).astype(int)
        components = []
        for column in (2, 3, 4):
            grid = np.empty((len(ys), len(xs)))
            grid[j, i] = table[:, column]
            components.append(grid)
        return MetricTensorField(domain, *components)

    def load_generators(self, path: PathLike) -> List[PlaneIsometry]:
        """Charge un fichier de générateurs (une isométrie par ligne)."""
        resolved = self._require(path, "Generator file")
        if resolved not in self._generators:
            self._generators[resolved] = [parse_generator_line(words) for words in _tokens(resolved)]
        return self._generators[resolved]

    def load_deck(self, path: PathLike) -> List[MoebiusMap]:
        """Charge un fichier de transformations de revêtement."""
        resolved = self._require(path, "Deck file")
        return [parse_deck_line(words) for words in _tokens(resolved)]

    def load_job(self, path: PathLike, overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """
        Charge une configuration de job et applique les options de ligne de commande.

        Raises:
            JobConfigError: Fichier absent, JSON invalide ou configuration refusée par le schéma
        """
        raw: Dict[str, Any] = {}
        if path is not None:
            resolved = self.resolve(path)
            if not resolved.exists():
                raise JobConfigError(f"Job configuration not found at {resolved}")
            try:
                with open(resolved, "r", encoding="utf-8") as f:
                    raw = json.load(f)
            except json.JSONDecodeError as e:
                raise JobConfigError(f"Job configuration {resolved.name} is not valid JSON: {e}")
        raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
        try:
            job = JobConfigSchema().load(raw)
        except ValidationError as e:
            raise JobConfigError(f"Invalid job configuration: {e.messages}")
        for key in ("metric", "tensor", "generators", "deck"):
            if key in job and not self.resolve(job[key]).exists():
                raise JobConfigError(f"Input file for '{key}' not found: {job[key]}")
        return job


# Instance globale
input_loader = InputLoader()
