"""
Borne explicite sur le nombre de classes d'homotopie de géodésiques de cylindres plats.
"""
import logging
from dataclasses import dataclass, field
from math import gcd
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from scipy import ndimage

from .errors import BadLattice, BoundTooLarge, CaseNotCountable, CountError, NoComplement
from .isogroup import IsometryGroupDescription, TranslationLattice

logger = logging.getLogger(__name__)

MAX_DIRECTIONS = 1_000_000
COVERING_FACTORS = {"Z2": 1, "Z2minus": 2, "Lambda1": 3, "Z2i": 4, "Lambda0": 6}


class DirectionSet(NamedTuple):
    bound_radius: float
    directions: List[Tuple[int, int]]
    lengths: List[float]
    contradiction: bool


class ComplementDisc(NamedTuple):
    center: complex
    r: float


@dataclass
class HomotopyClassBound:
    """
    Borne sur les classes d'homotopie.

    ``total`` ne multiplie pas par ``component_multiplier`` (nombre de
    composantes), rapporté séparément.
    """
    case: int
    label: str
    per_direction: int
    covering_factor: int
    total: int
    component_multiplier: int
    directions: List[Tuple[int, int]] = field(default_factory=list)
    r: Optional[float] = None
    bound_radius: Optional[float] = None
    alpha: Optional[float] = None
    a: Optional[complex] = None
    contradiction: bool = False


def _check_lattice(alpha: float, a: complex) -> None:
    if not alpha > 0:
        raise BadLattice(f"alpha must be positive, got {alpha}")
    if not complex(a).imag > 0:
        raise BadLattice(f"a must lie in the upper half-plane, got {a}")


def lattice_area(alpha: float, a: complex) -> float:
    """Aire de C / Z^2(alpha, a) = alpha Im a."""
    _check_lattice(alpha, a)
    return float(alpha * complex(a).imag)


def enumerate_directions(alpha: float, a: complex, r: float) -> DirectionSet:
    """
    Directions rationnelles (p, q) premières entre elles, au signe près, avec
    0 < |p alpha + q a| <= aire / r, triées par longueur.

    Signe canonique : q > 0, ou q = 0 et p = 1.

    Raises:
        BadLattice: Réseau ou rayon invalide
        BoundTooLarge: Si l'énumération dépasserait 10^6 directions
    """
    a = complex(a)
    _check_lattice(alpha, a)
    if not r > 0:
        raise BadLattice(f"Complement radius must be positive, got {r}")
    area = lattice_area(alpha, a)
    bound = area / r
    if np.pi * bound ** 2 / area > MAX_DIRECTIONS:
        raise BoundTooLarge(f"About {np.pi * bound ** 2 / area:.3g} lattice vectors within radius {bound:.4g}")

    limit = bound * (1 + 1e-12)
    found = []
    if alpha <= limit:
        found.append((float(alpha), 0, 1))
    for q in range(1, int(np.floor(limit / a.imag)) + 1):
        rest = limit ** 2 - (q * a.imag) ** 2
        if rest < 0:
            continue
        s = np.sqrt(rest)
        p_lo = int(np.ceil((-q * a.real - s) / alpha))
        p_hi = int(np.floor((-q * a.real + s) / alpha))
        for p in range(p_lo, p_hi + 1):
            if gcd(p, q) != 1:
                continue
            length = abs(p * alpha + q * a)
            if 0 < length <= limit:
                found.append((float(length), q, p))
    found.sort()
    directions = [(p, q) for _, q, p in found]
    contradiction = not directions
    if contradiction:
        logger.warning(f"⚠️  [COUNT] no lattice direction within radius {bound:.4g}: inputs are contradictory")
    return DirectionSet(float(bound), directions, [length for length, _, _ in found], contradiction)


def complement_disc(mask: np.ndarray, spacing: float = 1.0, origin: complex = 0j) -> ComplementDisc:
    """
    Plus grand disque inscrit dans le complémentaire de l'image développée.

    Args:
        mask: Image développée E rasterisée (True = image)
        spacing: Pas de la grille de référence
        origin: Position du noeud [0, 0]

    Returns:
        ComplementDisc ; le rayon est diminué d'un pas

    Raises:
        NoComplement: Si le complémentaire est d'intérieur vide à cette résolution
    """
    occupied = np.pad(np.asarray(mask, dtype=bool), 1, constant_values=True)
    distance = ndimage.distance_transform_edt(~occupied) * spacing
    j, i = np.unravel_index(int(np.argmax(distance)), distance.shape)
    radius = float(distance[j, i]) - spacing
    if radius <= 0:
        raise NoComplement("Complement of the developed image has empty interior at grid resolution")
    center = complex(origin) + spacing * complex(i - 1, j - 1)
    logger.info(f"✅ [COMPLEMENT] disc of radius {radius:.4g} at {center:.4g}")
    return ComplementDisc(center, radius)


def rasterize_developed_image(values: np.ndarray, lattice: TranslationLattice, sample_spacing: float,
                              n: int = 128) -> Tuple[np.ndarray, float, complex]:
    """
    Image développée modulo le réseau, sur une grille cartésienne couvrant un domaine fondamental.

    Args:
        values: Valeurs h aux noeuds (NaN ignorés)
        lattice: Réseau de rang 2 dans les coordonnées développées
        sample_spacing: Écart maximal entre images de noeuds voisins
        n: Résolution nominale

    Returns:
        (masque E, pas, origine)
    """
    if lattice.rank != 2:
        raise BadLattice(f"Rasterization needs a rank-2 lattice, got rank {lattice.rank}")
    u, v = lattice.basis
    points = np.asarray(values)[np.isfinite(values)]
    B = np.array([[u.real, v.real], [u.imag, v.imag]])
    st = np.linalg.solve(B, np.vstack([points.real, points.imag])) % 1.0

    cell = max(min(abs(u), abs(v)) / n, sample_spacing)
    n_s = max(8, int(abs(u) / cell))
    n_t = max(8, int(abs(v) / cell))
    occupancy, _, _ = np.histogram2d(st[0], st[1], bins=[n_s, n_t], range=[[0, 1], [0, 1]])
    occupied = np.pad(occupancy > 0, 1, mode="wrap")
    occupied = ndimage.binary_dilation(occupied)[1:-1, 1:-1]

    corners = np.array([0, u, v, u + v])
    x_min, x_max = corners.real.min(), corners.real.max()
    y_min, y_max = corners.imag.min(), corners.imag.max()
    spacing = cell / 2
    xs = np.arange(x_min, x_max + spacing / 2, spacing)
    ys = np.arange(y_min, y_max + spacing / 2, spacing)
    grid = xs[np.newaxis, :] + 1j * ys[:, np.newaxis]
    coords = np.linalg.solve(B, np.vstack([grid.ravel().real, grid.ravel().imag])) % 1.0
    si = np.minimum((coords[0] * n_s).astype(int), n_s - 1)
    ti = np.minimum((coords[1] * n_t).astype(int), n_t - 1)
    mask = occupied[si, ti].reshape(grid.shape)
    return mask, float(spacing), complex(x_min, y_min)


def class_bound(description: IsometryGroupDescription, genus: int, r: Optional[float] = None) -> HomotopyClassBound:
    """
    Borne sur le nombre de classes d'homotopie.

    Cas 5 (et famille Zminus de rang 1) : 1. Rang 2 : nombre de directions
    fois 3g - 3 fois l'ordre de l'image de rotation.

    Raises:
        CaseNotCountable: Pour les cas 1 à 4
        CountError: Si g < 2 ou si r manque en rang 2
    """
    if genus < 2:
        raise CountError(f"Genus must be at least 2, got {genus}")
    case = description.case_number
    if case not in (5, 6, 7):
        raise CaseNotCountable(f"Case {case} ({description.label}) has no homotopy-class bound")
    per_direction = 3 * genus - 3
    label = description.label

    if label in ("Z", "Zminus"):
        return HomotopyClassBound(case, label, per_direction, 2 if label == "Zminus" else 1, 1, per_direction,
                                  alpha=description.parameters.get("alpha"))

    lattice = description.lattice
    if r is None:
        raise CountError(f"Case {case} ({label}) needs a complement radius r")
    directions = enumerate_directions(lattice.alpha, lattice.a, r)
    covering = COVERING_FACTORS[label]
    total = max(1, len(directions.directions) * per_direction * covering)
    logger.info(f"✅ [COUNT] {len(directions.directions)} direction(s) x {per_direction} x {covering} = {total}")
    return HomotopyClassBound(
        case, label, per_direction, covering, total, per_direction,
        directions=directions.directions, r=float(r), bound_radius=directions.bound_radius,
        alpha=lattice.alpha, a=lattice.a, contradiction=directions.contradiction,
    )
