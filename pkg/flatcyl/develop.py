"""
Application développante d'une région plate.

Sur une région simplement connexe où log rho est harmonique, on intègre le
conjugué harmonique psi puis h' = exp(log rho + i psi) ; h est une isométrie
locale vers le plan euclidien. Les transformations de revêtement M sont
poussées en isométries R avec h o M = R o h.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
from scipy import ndimage, sparse
from scipy.sparse import csgraph

from .config import Config
from .errors import InsufficientOverlap, NotEquivariant, NotHarmonic, NotIsometric, NotSimplyConnected
from .isogroup import IsometryGroupDescription, PlaneIsometry, classify
from .metric_core import ConformalDensity, Domain, MoebiusMap, default_flat_tolerance, equivariance_residual

logger = logging.getLogger(__name__)

ISOMETRY_TOL = 1e-3
MIN_OVERLAP = 20


class HarmonicityCheck(NamedTuple):
    max_laplacian: float
    passed: bool
    tol: float


@dataclass
class ConjugateField:
    """Conjugué harmonique psi (NaN hors région) et résidu d'indépendance du chemin."""
    psi: np.ndarray
    residual: float
    root: int
    order: np.ndarray
    predecessors: np.ndarray


@dataclass
class DevelopingMap:
    """
    h sur les noeuds de la région, h(z0) = 0 et h'(z0) > 0.

    Attributes:
        values: h aux noeuds (NaN hors région)
        derivative: h' aux noeuds
        cr_residual: Défaut de Cauchy-Riemann relatif sur les arêtes hors arbre
    """
    density: ConformalDensity
    region: np.ndarray
    z0: complex
    values: np.ndarray
    derivative: np.ndarray
    psi: np.ndarray
    cr_residual: float

    @property
    def domain(self) -> Domain:
        return self.density.domain

    @cached_property
    def _second(self) -> np.ndarray:
        out = np.full(self.region.shape, np.nan + 0j)
        gx, gy = self.density.grad_log_rho(self.domain.nodes[self.region])
        out[self.region] = self.derivative[self.region] * (gx - 1j * gy)
        return out

    @cached_property
    def _nearest(self):
        _, indices = ndimage.distance_transform_edt(~self.region, return_indices=True)
        return indices

    def evaluate(self, points) -> np.ndarray:
        """h aux points par développement de Taylor d'ordre 2 depuis le noeud de région le plus proche."""
        points = np.atleast_1d(np.asarray(points, dtype=complex))
        domain = self.domain
        i = np.round((points.real - domain.x0) / domain.h).astype(int)
        j = np.round((points.imag - domain.y0) / domain.h).astype(int)
        inside = (i >= 0) & (i < domain.nx) & (j >= 0) & (j < domain.ny)
        out = np.full(points.shape, np.nan + 0j)
        jj = self._nearest[0][j[inside], i[inside]]
        ii = self._nearest[1][j[inside], i[inside]]
        delta = points[inside] - domain.nodes[jj, ii]
        out[inside] = (self.values[jj, ii] + self.derivative[jj, ii] * delta
                       + 0.5 * self._second[jj, ii] * delta ** 2)
        return out

    def node_mask_of(self, points: np.ndarray) -> np.ndarray:
        """Points dont le noeud le plus proche et ses 4 voisins sont dans la région."""
        domain = self.domain
        i = np.round((points.real - domain.x0) / domain.h).astype(int)
        j = np.round((points.imag - domain.y0) / domain.h).astype(int)
        ok = (i >= 1) & (i < domain.nx - 1) & (j >= 1) & (j < domain.ny - 1)
        interior = np.zeros(self.region.shape, dtype=bool)
        r = self.region
        interior[1:-1, 1:-1] = r[1:-1, 1:-1] & r[1:-1, 2:] & r[1:-1, :-2] & r[2:, 1:-1] & r[:-2, 1:-1]
        out = np.zeros(points.shape, dtype=bool)
        out[ok] = interior[j[ok], i[ok]]
        return out


@dataclass
class PushforwardIsometry:
    """R telle que h o M = R o h sur le recouvrement."""
    source: MoebiusMap
    image: PlaneIsometry
    residual: float
    samples: int
    raw_lambda: complex


@dataclass
class PipelineClassification:
    description: IsometryGroupDescription
    pushforwards: List[PushforwardIsometry]
    developing_map: DevelopingMap
    surface_consistent: bool
    generators: List[PlaneIsometry] = field(default_factory=list)


# ============================================================================
# Régions
# ============================================================================

def slit_region(domain: Domain, region: Optional[np.ndarray] = None, direction: complex = -1 + 0j) -> np.ndarray:
    """Retire de la région les noeuds à moins d'un pas de la demi-droite {t direction, t > 0}."""
    region = domain.mask.copy() if region is None else np.asarray(region, dtype=bool).copy()
    direction = complex(direction) / abs(direction)
    rotated = domain.nodes * np.conj(direction)
    cut = (rotated.real > 0) & (np.abs(rotated.imag) < domain.h)
    return region & ~cut


def _region_graph(region: np.ndarray):
    """Graphe à 4 voisins de la région ; renvoie (graphe, index, arêtes)."""
    index = -np.ones(region.shape, dtype=int)
    index[region] = np.arange(int(region.sum()))
    rows, cols = [], []
    horizontal = region[:, :-1] & region[:, 1:]
    jj, ii = np.nonzero(horizontal)
    rows.append(index[jj, ii])
    cols.append(index[jj, ii + 1])
    vertical = region[:-1, :] & region[1:, :]
    jj, ii = np.nonzero(vertical)
    rows.append(index[jj, ii])
    cols.append(index[jj + 1, ii])
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    n = int(region.sum())
    graph = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    return graph, index, rows, cols


def _edge_increments(start_values, end_values, start_slopes, end_slopes, step, kind):
    """Trapèzes corrigés (Euler-Maclaurin) le long d'arêtes de longueur ``step``."""
    return step / 2 * (start_values + end_values) - step ** 2 / 12 * (end_slopes - start_slopes) * kind


# ============================================================================
# Opérations
# ============================================================================

def harmonicity_check(density: ConformalDensity, region: Optional[np.ndarray] = None,
                      tol: Optional[float] = None) -> HarmonicityCheck:
    """max |Delta log rho| (laplacien à 5 points) sur la région ; réussite si <= tol."""
    domain = density.domain
    region = domain.mask if region is None else np.asarray(region, dtype=bool)
    tol = default_flat_tolerance(density) if tol is None else tol
    L = density.log_grid
    lap = np.full(L.shape, np.nan)
    lap[1:-1, 1:-1] = (L[1:-1, 2:] + L[1:-1, :-2] + L[2:, 1:-1] + L[:-2, 1:-1] - 4 * L[1:-1, 1:-1]) / domain.h ** 2
    values = np.abs(lap[region & domain.stencil_mask])
    worst = float(values.max()) if values.size else 0.0
    return HarmonicityCheck(worst, worst <= tol, float(tol))


def harmonic_conjugate(density: ConformalDensity, region: np.ndarray, z0: complex,
                       tol: Optional[float] = None) -> ConjugateField:
    """
    Conjugué harmonique psi de log rho, psi(z0) = 0.

    psi_x = -(log rho)_y et psi_y = (log rho)_x intégrés le long d'un arbre
    couvrant en largeur issu de z0 ; chaque arête hors arbre sert de test
    d'indépendance du chemin.

    Raises:
        NotSimplyConnected: Si le résidu d'indépendance dépasse tol
    """
    tol = Config.PATH_TOL if tol is None else tol
    domain = density.domain
    region = np.asarray(region, dtype=bool)
    graph, index, rows, cols = _region_graph(region)
    j0, i0 = domain.index_of(complex(z0))
    if not (0 <= j0 < domain.ny and 0 <= i0 < domain.nx) or not region[j0, i0]:
        raise NotSimplyConnected(f"Base point {z0} is not a node of the region")
    root = int(index[j0, i0])

    nodes = domain.nodes[region]
    gx, gy = density.grad_log_rho(nodes)
    gxy = density.mixed_log_rho(nodes)
    h = domain.h

    def increment(a, b):
        horizontal = np.abs((nodes[b] - nodes[a]).real) > h / 2
        sign = np.where(horizontal, np.sign((nodes[b] - nodes[a]).real), np.sign((nodes[b] - nodes[a]).imag))
        d_x = _edge_increments(-gy[a], -gy[b], -gxy[a], -gxy[b], h, sign)
        d_y = _edge_increments(gx[a], gx[b], gxy[a], gxy[b], h, sign)
        return sign * np.where(horizontal, d_x, d_y)

    order, predecessors = csgraph.breadth_first_order(graph, root, directed=False, return_predecessors=True)
    if len(order) != len(nodes):
        raise NotSimplyConnected(f"Region is disconnected: {len(nodes) - len(order)} node(s) unreachable from z0")
    psi_nodes = np.zeros(len(nodes))
    children = order[1:]
    parents = predecessors[children]
    steps = increment(parents, children)
    for child, parent, d in zip(children, parents, steps):
        psi_nodes[child] = psi_nodes[parent] + d

    mismatch = psi_nodes[cols] - psi_nodes[rows] - increment(rows, cols)
    residual = float(np.max(np.abs(mismatch))) if mismatch.size else 0.0
    if residual > tol:
        raise NotSimplyConnected(f"Path-dependence residual {residual:.3e} exceeds {tol:.1e}")

    psi = np.full(region.shape, np.nan)
    psi[region] = psi_nodes
    logger.info(f"✅ [CONJUGATE] psi over {len(nodes)} node(s), path residual {residual:.2e}")
    return ConjugateField(psi, residual, root, order, predecessors)


def build_developing_map(density: ConformalDensity, region: np.ndarray, z0: complex,
                         harmonic_tol: Optional[float] = None,
                         path_tol: Optional[float] = None) -> DevelopingMap:
    """
    h(z) = integrale de z0 à z de exp(log rho + i psi).

    Raises:
        NotHarmonic: Si log rho n'est pas harmonique sur la région
        NotSimplyConnected: Propagée depuis harmonic_conjugate
    """
    region = np.asarray(region, dtype=bool) & density.domain.mask
    check = harmonicity_check(density, region, harmonic_tol)
    if not check.passed:
        raise NotHarmonic(f"max |Delta log rho| = {check.max_laplacian:.3e} exceeds {check.tol:.3e}")
    conj = harmonic_conjugate(density, region, z0, path_tol)

    domain = density.domain
    nodes = domain.nodes[region]
    gx, gy = density.grad_log_rho(nodes)
    dh = np.exp(density.log_rho(nodes) + 1j * conj.psi[region])
    d2h = dh * (gx - 1j * gy)
    h = domain.h
    graph, index, rows, cols = _region_graph(region)

    def increment(a, b):
        delta = nodes[b] - nodes[a]
        horizontal = np.abs(delta.real) > h / 2
        unit = np.where(horizontal, np.sign(delta.real), 1j * np.sign(delta.imag))
        # dérivée de l'intégrande le long de l'arête : unit * h''
        return unit * (h / 2 * (dh[a] + dh[b])) - (h ** 2 / 12) * unit * unit * (d2h[b] - d2h[a])

    values_nodes = np.zeros(len(nodes), dtype=complex)
    children = conj.order[1:]
    parents = conj.predecessors[children]
    steps = increment(parents, children)
    for child, parent, d in zip(children, parents, steps):
        values_nodes[child] = values_nodes[parent] + d

    mismatch = values_nodes[cols] - values_nodes[rows] - increment(rows, cols)
    scale = h * np.abs(dh[rows])
    cr_residual = float(np.max(np.abs(mismatch) / scale)) if mismatch.size else 0.0

    values = np.full(region.shape, np.nan + 0j)
    derivative = np.full(region.shape, np.nan + 0j)
    values[region] = values_nodes
    derivative[region] = dh
    logger.info(f"✅ [DEVELOP] developing map on {len(nodes)} node(s), CR residual {cr_residual:.2e}")
    j0, i0 = domain.index_of(complex(z0))
    return DevelopingMap(density, region, complex(domain.nodes[j0, i0]), values, derivative, conj.psi, cr_residual)


def pushforward(
    dev: DevelopingMap,
    M: MoebiusMap,
    min_samples: int = MIN_OVERLAP,
    equivariance_tol: Optional[float] = None,
) -> PushforwardIsometry:
    """
    Ajuste R(w) = lambda w + a avec h(M z) = R(h(z)) par moindres carrés.

    Le recouvrement retenu est la plus grande composante connexe des noeuds z
    dont l'image M(z) retombe franchement dans la région.

    Raises:
        InsufficientOverlap: Moins de ``min_samples`` échantillons
        NotEquivariant: Si rho(M z) |M'(z)| s'écarte de rho(z) de plus de
            ``equivariance_tol`` (relatif) sur le recouvrement
        NotIsometric: Si | |lambda| - 1 | > 1e-3
    """
    domain = dev.domain
    nodes = domain.nodes
    overlap = np.zeros(dev.region.shape, dtype=bool)
    images = M(nodes[dev.region])
    overlap[dev.region] = dev.node_mask_of(images)
    labels, count = ndimage.label(overlap)
    if count == 0:
        raise InsufficientOverlap("No node of the region is mapped back into the region")
    sizes = ndimage.sum(overlap, labels, index=np.arange(1, count + 1))
    component = labels == (int(np.argmax(sizes)) + 1)
    n = int(component.sum())
    if n < min_samples:
        raise InsufficientOverlap(f"Only {n} overlap sample(s), need {min_samples}")

    if equivariance_tol is None:
        equivariance_tol = Config.EQUIVARIANCE_TOL
    drift = equivariance_residual(dev.density, M, nodes[component])
    if drift > equivariance_tol:
        raise NotEquivariant(f"Density is not invariant under the deck map: residual {drift:.2e} > {equivariance_tol:.2e}")

    w = dev.values[component]
    w_image = dev.evaluate(M(nodes[component]))
    w_mean, image_mean = w.mean(), w_image.mean()
    centered = w - w_mean
    lam = complex(np.sum((w_image - image_mean) * np.conj(centered)) / np.sum(np.abs(centered) ** 2))
    if abs(abs(lam) - 1) > ISOMETRY_TOL:
        raise NotIsometric(f"Best-fit similarity has |lambda| = {abs(lam):.6f}")
    raw = lam
    lam = lam / abs(lam)
    a = complex(image_mean - lam * w_mean)
    residual = float(np.max(np.abs(lam * w + a - w_image)))
    logger.info(f"✅ [PUSH] lambda={lam:.6f} a={a:.6f} residual={residual:.2e} over {n} sample(s)")
    return PushforwardIsometry(M, PlaneIsometry(lam=lam, a=a), residual, n, raw)


def pipeline_classify(
    density: ConformalDensity,
    region: np.ndarray,
    deck: Sequence[MoebiusMap],
    z0: complex,
    word_bound: Optional[int] = None,
    dev: Optional[DevelopingMap] = None,
) -> PipelineClassification:
    """
    Pousse les générateurs de revêtement et classe le groupe obtenu.

    Les tolérances de discrétude et de rotation suivent le résidu des
    ajustements ; un cas hors de {5, 6, 7} est signalé comme incohérent.
    """
    dev = dev or build_developing_map(density, region, z0)
    pushes = [pushforward(dev, M) for M in deck]
    noise = max((p.residual for p in pushes), default=0.0)
    discreteness_tol = max(Config.DISCRETENESS_TOL, 10 * noise)
    rotation_tol = max(Config.ROTATION_TOL, 10 * noise)
    generators = [p.image.snapped(rotation_tol) for p in pushes]
    description = classify(generators, word_bound, discreteness_tol=discreteness_tol, rotation_tol=rotation_tol)
    consistent = description.case_number in (5, 6, 7)
    if not consistent:
        logger.warning(f"⚠️  [PIPELINE] case {description.case_number} ({description.label}) "
                       f"cannot come from a closed surface; inputs are inconsistent")
    return PipelineClassification(description, pushes, dev, consistent, generators)
