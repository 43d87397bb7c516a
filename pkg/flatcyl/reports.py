"""
Écriture déterministe des artefacts : rapports JSON (clés triées) et
tables CSV en pleine précision.
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np

from .beltrami import BeltramiField, GridMap
from .count import HomotopyClassBound
from .develop import DevelopingMap, PushforwardIsometry
from .errors import FlatCylinderError
from .geodesy import DistancePair, FlatStrip, GeodesicPath
from .isogroup import IsometryGroupDescription
from .metric_core import ConformalDensity, curvature_field
from .schemas import (
    ClassificationReportSchema,
    ErrorReportSchema,
    FlatStripReportSchema,
    HomotopyBoundReportSchema,
    PushforwardReportSchema,
)

logger = logging.getLogger(__name__)

CSV_FORMAT = "%.17g"
PathLike = Union[str, Path]


def _finite(value: Any) -> Any:
    """Remplace récursivement NaN et infinis par None (JSON strict)."""
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    if isinstance(value, (float, np.floating)):
        return float(value) if np.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_json(path: PathLike, payload: Dict[str, Any]) -> Path:
    """Écrit un rapport JSON à clés triées."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_finite(payload), f, sort_keys=True, indent=2, allow_nan=False)
        f.write("\n")
    logger.info(f"💾 [REPORT] {path}")
    return path


def write_csv(path: PathLike, header: str, columns: Sequence[np.ndarray]) -> Path:
    """Écrit des colonnes de même longueur en CSV, format %.17g."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = np.column_stack([np.asarray(c, dtype=float).ravel() for c in columns])
    np.savetxt(path, table, fmt=CSV_FORMAT, delimiter=",", header=header, comments="")
    logger.info(f"💾 [REPORT] {path} ({len(table)} row(s))")
    return path


# ============================================================================
# Tables
# ============================================================================

def curvature_table(density: ConformalDensity):
    """Colonnes x,y,K aux noeuds où la courbure est définie."""
    K = curvature_field(density)
    keep = np.isfinite(K)
    nodes = density.domain.nodes[keep]
    return "x,y,K", [nodes.real, nodes.imag, K[keep]]


def beltrami_table(mu: BeltramiField):
    keep = mu.domain.mask
    nodes = mu.domain.nodes[keep]
    return "x,y,Re(mu),Im(mu)", [nodes.real, nodes.imag, mu.mu[keep].real, mu.mu[keep].imag]


def map_table(w: GridMap):
    keep = w.domain.mask
    nodes = w.domain.nodes[keep]
    return "x,y,Re(w),Im(w)", [nodes.real, nodes.imag, w.w[keep].real, w.w[keep].imag]


def density_table(density: ConformalDensity):
    keep = density.support & np.isfinite(density.log_grid)
    nodes = density.domain.nodes[keep]
    return "x,y,rho", [nodes.real, nodes.imag, np.exp(density.log_grid[keep])]


def path_table(path: GeodesicPath):
    return "t,x,y,vx,vy", [path.times, path.z.real, path.z.imag, path.v.real, path.v.imag]


def developing_table(dev: DevelopingMap):
    keep = dev.region
    nodes = dev.domain.nodes[keep]
    return "x,y,Re(h),Im(h)", [nodes.real, nodes.imag, dev.values[keep].real, dev.values[keep].imag]


# ============================================================================
# Rapports
# ============================================================================

def classification_report(description: IsometryGroupDescription) -> Dict[str, Any]:
    """
    Rapport de classification ; pour les cas Z et Zminus, ajoute le résumé du
    cylindre plat (circonférence alpha).
    """
    report = ClassificationReportSchema().dump(description)
    if description.label in ("Z", "Zminus"):
        report["flat_cylinder"] = {"circumference": description.parameters.get("alpha")}
    return report


def bound_report(bound: HomotopyClassBound) -> Dict[str, Any]:
    return HomotopyBoundReportSchema().dump(bound)


def pushforward_report(push: PushforwardIsometry) -> Dict[str, Any]:
    return PushforwardReportSchema().dump(push)


def strip_report(strip: FlatStrip, pair: Optional[DistancePair] = None,
                 area: Optional[float] = None) -> Dict[str, Any]:
    """Certificat de bande plate, avec l'aire de la bande et les distances si disponibles."""
    report = FlatStripReportSchema().dump(strip)
    report["area"] = area
    if pair is not None:
        report["distance_sup"] = pair.sup
        report["distance_inf"] = pair.inf
    return report


def error_report(command: str, error: FlatCylinderError) -> Dict[str, Any]:
    """Rapport d'échec : nom de la classe, module et message."""
    return {
        "command": command,
        "status": "error",
        "error": ErrorReportSchema().dump(
            {"error": type(error).__name__, "module": error.module, "message": str(error)}
        ),
    }
