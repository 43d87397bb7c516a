"""
Géodésiques d'une densité conforme et bandes plates.

L'équation des géodésiques de rho^2 |dz|^2 est z'' + 2 (d log rho)(z) z'^2 = 0,
intégrée par Runge-Kutta d'ordre 4 avec renormalisation de la vitesse.
"""
import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from scipy import ndimage, sparse
from scipy.interpolate import CubicHermiteSpline
from scipy.linalg import solve_banded
from scipy.optimize import minimize_scalar
from scipy.sparse import csgraph

from .config import Config
from .errors import GridTooCoarse, LeftDomain, NotFlat, NotParallel, PathTooShort, StepTooLarge
from .metric_core import ConformalDensity, MoebiusMap, curvature_field, default_flat_tolerance

logger = logging.getLogger(__name__)

# Voisinage à 16 : axes, diagonales et sauts de cavalier (demi-plan, le graphe est non orienté)
GRAPH_OFFSETS = ((0, 1), (1, 0), (1, 1), (1, -1), (1, 2), (2, 1), (1, -2), (2, -1))
REFINE_POINTS = 17
REFINE_ROUNDS = 30
MAX_QUERIES = 64


# ============================================================================
# Types
# ============================================================================

@dataclass(frozen=True)
class GeodesicState:
    """Position et vitesse ; une géodésique unitaire vérifie rho(z) |v| = 1."""
    z: complex
    v: complex

    @classmethod
    def unit(cls, density: ConformalDensity, z: complex, direction: complex) -> "GeodesicState":
        """État de vitesse unitaire dans la direction donnée."""
        direction = complex(direction) / abs(direction)
        rho = float(density.rho(np.array([complex(z)]))[0])
        return cls(complex(z), direction / rho)

    def reversed(self) -> "GeodesicState":
        return GeodesicState(self.z, -self.v)


@dataclass
class GeodesicPath:
    """Échantillons (t_k, z_k, v_k) avec t_k = k * step."""
    times: np.ndarray
    z: np.ndarray
    v: np.ndarray
    step: float
    exited: bool = False

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    @property
    def end(self) -> GeodesicState:
        return GeodesicState(complex(self.z[-1]), complex(self.v[-1]))

    def state(self, k: int) -> GeodesicState:
        return GeodesicState(complex(self.z[k]), complex(self.v[k]))

    def speed_residual(self, density: ConformalDensity) -> float:
        return float(np.max(np.abs(density.rho(self.z) * np.abs(self.v) - 1)))

    def spline(self) -> CubicHermiteSpline:
        """Interpolation d'Hermite cubique de t -> (x, y)."""
        return CubicHermiteSpline(
            self.times,
            np.column_stack([self.z.real, self.z.imag]),
            np.column_stack([self.v.real, self.v.imag]),
        )


@dataclass
class FlatStrip:
    """
    Bande plate certifiée entre deux géodésiques.

    Le repère (origin, direction) envoie gamma1(t) sur i t, la bande sur
    {0 <= Re z <= alpha}.
    """
    gamma1: GeodesicPath
    gamma2: GeodesicPath
    alpha: float
    frame_origin: complex
    frame_direction: complex
    max_curvature: float
    witness: Optional[complex]
    horizon: float
    region: np.ndarray
    tol: float


class ClosedGeodesicCheck(NamedTuple):
    is_invariant: bool
    c: float
    max_deviation: float


class DistancePair(NamedTuple):
    sup: float
    inf: float
    times: np.ndarray
    distances: np.ndarray
    feet: np.ndarray
    horizon: float


# ============================================================================
# Intégration
# ============================================================================

def _christoffel(density: ConformalDensity, z: complex) -> complex:
    gx, gy = density.grad_log_rho(np.array([z]))
    return complex(gx[0] - 1j * gy[0])


def integrate_geodesic(
    density: ConformalDensity,
    start: GeodesicState,
    T: float,
    step: Optional[float] = None,
    stop_at_boundary: bool = False,
) -> GeodesicPath:
    """
    Intègre une géodésique de vitesse unitaire sur [0, T].

    Args:
        density: Densité conforme
        start: État initial (renormalisé à vitesse unitaire)
        T: Durée
        step: Pas de temps (Config.GEODESIC_STEP par défaut)
        stop_at_boundary: Rend le chemin partiel avec exited=True au lieu de lever LeftDomain

    Returns:
        GeodesicPath

    Raises:
        LeftDomain: Si le chemin sort du domaine (chemin partiel dans .path)
        StepTooLarge: Si la dérive de vitesse dépasse Config.DRIFT_LIMIT par unité de temps
    """
    step = step or Config.GEODESIC_STEP
    domain = density.domain
    if not domain.contains(start.z):
        raise LeftDomain(f"Start point {start.z} is outside the domain")
    n_steps = int(round(T / step))

    z = complex(start.z)
    v = complex(start.v)
    v = v / (float(density.rho(np.array([z]))[0]) * abs(v))
    zs, vs = [z], [v]

    def accel(pos, vel):
        return -_christoffel(density, pos) * vel * vel

    for k in range(n_steps):
        k1z, k1v = v, accel(z, v)
        k2z, k2v = v + step / 2 * k1v, accel(z + step / 2 * k1z, v + step / 2 * k1v)
        k3z, k3v = v + step / 2 * k2v, accel(z + step / 2 * k2z, v + step / 2 * k2v)
        k4z, k4v = v + step * k3v, accel(z + step * k3z, v + step * k3v)
        z_new = z + step / 6 * (k1z + 2 * k2z + 2 * k3z + k4z)
        v_new = v + step / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)

        if not domain.contains(z_new):
            times = step * np.arange(len(zs))
            partial = GeodesicPath(times, np.array(zs), np.array(vs), step, exited=True)
            if stop_at_boundary:
                logger.info(f"⚠️  [GEODESIC] left the domain at t={times[-1]:.4f}")
                return partial
            raise LeftDomain(f"Geodesic left the domain at t={times[-1]:.4f}", path=partial)

        speed = float(density.rho(np.array([z_new]))[0]) * abs(v_new)
        drift = abs(speed - 1)
        if drift / step > Config.DRIFT_LIMIT:
            raise StepTooLarge(f"Speed drift {drift:.2e} over one step of {step} exceeds "
                               f"{Config.DRIFT_LIMIT} per unit time (step {k + 1})")
        z, v = z_new, v_new / speed
        zs.append(z)
        vs.append(v)

    return GeodesicPath(step * np.arange(len(zs)), np.array(zs), np.array(vs), step)


# ============================================================================
# Géodésiques fermées
# ============================================================================

def _locate(path: GeodesicPath, spline: CubicHermiteSpline, point: complex) -> Tuple[float, float]:
    """Temps s du point du chemin le plus proche de ``point`` et distance euclidienne."""
    k = int(np.argmin(np.abs(path.z - point)))
    lo = path.times[max(k - 1, 0)]
    hi = path.times[min(k + 1, len(path.times) - 1)]

    def gap(s):
        x, y = spline(s)
        return abs(complex(x, y) - point)

    if hi <= lo:
        return float(lo), gap(lo)
    result = minimize_scalar(gap, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return float(result.x), float(result.fun)


def closed_geodesic_check(
    density: ConformalDensity,
    M: MoebiusMap,
    path: GeodesicPath,
    tol: float = 1e-5,
) -> ClosedGeodesicCheck:
    """
    Teste M(gamma(t)) = gamma(t + c) pour un décalage constant c.

    Raises:
        PathTooShort: Si l'image du chemin prolonge le chemin sans le recouvrir
    """
    spline = path.spline()
    t0, t1 = float(path.times[0]), float(path.times[-1])
    edge = 2 * path.step

    c = None
    best_gap = np.inf
    for anchor in (0, len(path.times) - 1):
        s, gap = _locate(path, spline, complex(M(path.z[anchor])))
        best_gap = min(best_gap, gap)
        if gap <= tol and t0 + edge < s < t1 - edge:
            c = s - path.times[anchor]
            break

    if c is None:
        for anchor, tangent_end in ((0, -1), (-1, 0)):
            image = complex(M(path.z[anchor]))
            end = path.z[tangent_end]
            tangent = path.v[tangent_end] / abs(path.v[tangent_end])
            if abs(((image - end) * np.conj(tangent)).imag) <= tol:
                raise PathTooShort(f"Image of the path start lies beyond the sampled range (gap {best_gap:.3g})")
        return ClosedGeodesicCheck(False, float("nan"), float(best_gap))

    overlap = (path.times + c >= t0) & (path.times + c <= t1)
    if np.count_nonzero(overlap) < 2:
        raise PathTooShort(f"Shift c={c:.6g} leaves no overlap on a path of duration {t1 - t0:.6g}")
    ts = path.times[overlap]
    images = M(path.z[overlap])
    xy = spline(ts + c)
    deviation = float(np.max(np.abs(images - (xy[:, 0] + 1j * xy[:, 1]))))
    logger.info(f"🔁 [CLOSED] shift c={c:.6f}, max deviation {deviation:.2e}")
    return ClosedGeodesicCheck(deviation <= tol, float(c), deviation)


# ============================================================================
# Distance entre géodésiques
# ============================================================================

def _project_on_polyline(points: np.ndarray, p: complex) -> complex:
    A, B = points[:-1], points[1:]
    seg = B - A
    length2 = np.abs(seg) ** 2
    s = np.clip(np.where(length2 > 0, ((p - A) * np.conj(seg)).real / np.where(length2 > 0, length2, 1), 0), 0, 1)
    candidates = A + s * seg
    return complex(candidates[np.argmin(np.abs(candidates - p))])


def _rho_length(density: ConformalDensity, polyline: np.ndarray) -> float:
    mids = (polyline[1:] + polyline[:-1]) / 2
    return float(np.sum(density.rho(mids) * np.abs(np.diff(polyline))))


def _resample(polyline: np.ndarray, n: int) -> np.ndarray:
    arc = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(polyline)))])
    if arc[-1] == 0:
        return np.full(n, polyline[0])
    targets = np.linspace(0, arc[-1], n)
    return np.interp(targets, arc, polyline.real) + 1j * np.interp(targets, arc, polyline.imag)


def _refine(density: ConformalDensity, polyline: np.ndarray, target: np.ndarray) -> np.ndarray:
    """
    Relaxe un chemin vers une géodésique orthogonale à ``target``.

    À pas euclidien uniforme ds : p'' = composante normale de grad log rho,
    résolu par systèmes tridiagonaux successifs, extrémité reprojetée.
    """
    p = _resample(polyline, REFINE_POINTS)
    n = len(p) - 2
    banded = np.zeros((3, n))
    banded[0, 1:] = 1
    banded[1, :] = -2
    banded[2, :-1] = 1
    for _ in range(REFINE_ROUNDS):
        p[-1] = _project_on_polyline(target, p[-2])
        ds = float(np.sum(np.abs(np.diff(p)))) / (len(p) - 1)
        if ds == 0:
            break
        tangent = np.gradient(p)
        tangent = tangent / np.where(np.abs(tangent) > 0, np.abs(tangent), 1)
        gx, gy = density.grad_log_rho(p[1:-1])
        grad = gx + 1j * gy
        normal = grad - (grad * np.conj(tangent[1:-1])).real * tangent[1:-1]
        rhs = ds ** 2 * normal
        rhs[0] -= p[0]
        rhs[-1] -= p[-1]
        p[1:-1] = solve_banded((1, 1), banded, rhs)
        p = _resample(p, REFINE_POINTS)
    p[-1] = _project_on_polyline(target, p[-2])
    return p


def _distance_graph(density: ConformalDensity, gamma2: GeodesicPath):
    """Graphe pondéré par rho et super-source reliée aux noeuds proches de gamma2."""
    domain = density.domain
    mask = density.support
    rho = np.where(mask, np.exp(np.where(np.isfinite(density.log_grid), density.log_grid, 0.0)), 0.0)
    index = -np.ones(mask.shape, dtype=int)
    index[mask] = np.arange(int(mask.sum()))
    n = int(mask.sum())

    rows, cols, weights = [], [], []
    for dj, di in GRAPH_OFFSETS:
        src = np.zeros(mask.shape, dtype=bool)
        j0, j1 = max(0, -dj), mask.shape[0] - max(0, dj)
        i0, i1 = max(0, -di), mask.shape[1] - max(0, di)
        both = mask[j0:j1, i0:i1] & mask[j0 + dj:j1 + dj, i0 + di:i1 + di]
        src[j0:j1, i0:i1] = both
        jj, ii = np.nonzero(src)
        length = domain.h * np.hypot(dj, di)
        rows.append(index[jj, ii])
        cols.append(index[jj + dj, ii + di])
        weights.append(length * (rho[jj, ii] + rho[jj + dj, ii + di]) / 2)

    # super-source : noeuds à moins de 1.5 h de gamma2, pondérés par leur distance à gamma2
    nodes = domain.nodes[mask]
    seeds, seed_weights = [], []
    near = ndimage.binary_dilation(_rasterize_polyline(domain, gamma2.z) & mask, iterations=2) & mask
    for node_index in index[near]:
        point = nodes[node_index]
        foot = _project_on_polyline(gamma2.z, point)
        gap = abs(point - foot)
        if gap <= 1.5 * domain.h:
            seeds.append(node_index)
            seed_weights.append(max(gap * float(density.rho(np.array([point]))[0]), 1e-300))
    if not seeds:
        raise GridTooCoarse("Second geodesic does not pass near any grid node of the domain")
    rows.append(np.full(len(seeds), n))
    cols.append(np.array(seeds))
    weights.append(np.array(seed_weights))

    graph = sparse.csr_matrix(
        (np.concatenate(weights), (np.concatenate(rows), np.concatenate(cols))), shape=(n + 1, n + 1)
    )
    return graph, index, n


def _rasterize_polyline(domain, points: np.ndarray) -> np.ndarray:
    out = np.zeros((domain.ny, domain.nx), dtype=bool)
    i = np.round((points.real - domain.x0) / domain.h).astype(int)
    j = np.round((points.imag - domain.y0) / domain.h).astype(int)
    ok = (i >= 0) & (i < domain.nx) & (j >= 0) & (j < domain.ny)
    out[j[ok], i[ok]] = True
    return out


def bounded_distance_pair(
    density: ConformalDensity,
    gamma1: GeodesicPath,
    gamma2: GeodesicPath,
    horizon: Optional[float] = None,
) -> DistancePair:
    """
    d(gamma1(t), gamma2) pour t dans [0, horizon] ; sup et inf.

    Plus courts chemins de Dijkstra sur le graphe à 16 voisins pondéré par
    rho, puis relaxation locale du chemin trouvé.

    Raises:
        PathTooShort: Si gamma1 ne couvre pas l'horizon
        GridTooCoarse: Si distance de graphe et distance raffinée diffèrent de plus de Config.GRID_TOO_COARSE
    """
    horizon = gamma1.duration if horizon is None else horizon
    if gamma1.duration < horizon - 1e-12:
        raise PathTooShort(f"First geodesic covers {gamma1.duration:.4g} < horizon {horizon:.4g}")
    domain = density.domain
    graph, index, n = _distance_graph(density, gamma2)
    dist, predecessors = csgraph.dijkstra(graph, directed=False, indices=n, return_predecessors=True)
    nodes = domain.nodes[index >= 0]
    field = np.full(index.shape, np.inf)
    field[index >= 0] = dist[:n]

    selected = np.nonzero(gamma1.times - gamma1.times[0] <= horizon + 1e-12)[0]
    if len(selected) > MAX_QUERIES:
        selected = selected[np.linspace(0, len(selected) - 1, MAX_QUERIES).round().astype(int)]

    times, distances, feet = [], [], []
    for k in selected:
        point = complex(gamma1.z[k])
        j, i = domain.index_of(point)
        if not (0 <= j < domain.ny and 0 <= i < domain.nx) or index[j, i] < 0:
            raise GridTooCoarse(f"gamma1({gamma1.times[k]:.4g}) does not snap to a domain node")
        fj, fi = (point.imag - domain.y0) / domain.h, (point.real - domain.x0) / domain.h
        graph_estimate = float(ndimage.map_coordinates(field, [[fj], [fi]], order=1, mode="nearest")[0])
        if not np.isfinite(graph_estimate):
            graph_estimate = float(field[j, i])

        chain = [point]
        node = index[j, i]
        while node != n and node >= 0:
            chain.append(complex(nodes[node]))
            node = predecessors[node]
        refined = _refine(density, np.array(chain), gamma2.z)
        d = _rho_length(density, refined)
        if d > 0 and abs(graph_estimate - d) > Config.GRID_TOO_COARSE * d:
            raise GridTooCoarse(
                f"Graph distance {graph_estimate:.5g} and refined distance {d:.5g} differ by more than "
                f"{Config.GRID_TOO_COARSE:.0%} at t={gamma1.times[k]:.4g}"
            )
        times.append(float(gamma1.times[k]))
        distances.append(d)
        feet.append(refined[-1])

    distances = np.array(distances)
    logger.info(f"📏 [DISTANCE] sup={distances.max():.6f} inf={distances.min():.6f} over horizon {horizon:.4g}")
    return DistancePair(float(distances.max()), float(distances.min()), np.array(times), distances,
                        np.array(feet), float(horizon))


# ============================================================================
# Certification des bandes plates
# ============================================================================

def _rasterize_quads(domain, side1: np.ndarray, side2: np.ndarray) -> np.ndarray:
    """Noeuds contenus dans les quadrilatères (side1[k], side1[k+1], side2[k+1], side2[k])."""
    out = np.zeros((domain.ny, domain.nx), dtype=bool)
    nodes = domain.nodes
    triangles: List[Tuple[complex, complex, complex]] = []
    for k in range(len(side1) - 1):
        triangles.append((side1[k], side1[k + 1], side2[k + 1]))
        triangles.append((side1[k], side2[k + 1], side2[k]))
    for a, b, c in triangles:
        xs = [a.real, b.real, c.real]
        ys = [a.imag, b.imag, c.imag]
        i0 = max(0, int(np.floor((min(xs) - domain.x0) / domain.h)))
        i1 = min(domain.nx, int(np.ceil((max(xs) - domain.x0) / domain.h)) + 1)
        j0 = max(0, int(np.floor((min(ys) - domain.y0) / domain.h)))
        j1 = min(domain.ny, int(np.ceil((max(ys) - domain.y0) / domain.h)) + 1)
        if i0 >= i1 or j0 >= j1:
            continue
        p = nodes[j0:j1, i0:i1]
        det = ((b - a) * np.conj(c - a)).imag
        if det == 0:
            continue
        # coordonnées barycentriques
        l1 = ((p - a) * np.conj(c - a)).imag / det
        l2 = ((b - a) * np.conj(p - a)).imag / det
        inside = (l1 >= 0) & (l2 >= 0) & (l1 + l2 <= 1)
        out[j0:j1, i0:i1] |= inside
    return out & domain.mask


def certify_flat_strip(
    density: ConformalDensity,
    gamma1: GeodesicPath,
    gamma2: GeodesicPath,
    tol: Optional[float] = None,
    horizon: Optional[float] = None,
    pair: Optional[DistancePair] = None,
) -> FlatStrip:
    """
    Certifie la bande plate bornée par deux géodésiques parallèles.

    Args:
        density: Densité conforme (échantillonnable sur la grille)
        gamma1, gamma2: Géodésiques bordantes
        tol: Seuil de courbure (tolérance plate par défaut de la densité)
        horizon: Horizon de temps sur gamma1
        pair: Résultat de bounded_distance_pair déjà calculé

    Returns:
        FlatStrip

    Raises:
        NotParallel: Si sup - inf dépasse Config.STRIP_PARALLEL_TOL (relatif)
        NotFlat: Si |K| > tol dans la région enclose (témoin joint)
    """
    pair = pair or bounded_distance_pair(density, gamma1, gamma2, horizon)
    if pair.sup - pair.inf > Config.STRIP_PARALLEL_TOL * pair.sup:
        raise NotParallel(f"Distance varies from {pair.inf:.5g} to {pair.sup:.5g} over the horizon")

    tol = default_flat_tolerance(density) if tol is None else tol
    indices = [int(np.argmin(np.abs(gamma1.times - t))) for t in pair.times]
    region = _rasterize_quads(density.domain, gamma1.z[indices], pair.feet)
    K = curvature_field(density)
    valid = region & np.isfinite(K)
    if not np.any(valid):
        raise GridTooCoarse("Strip region contains no node with a full curvature stencil")
    masked = np.where(valid, np.abs(K), -np.inf)
    j, i = np.unravel_index(int(np.argmax(masked)), masked.shape)
    max_curvature = float(masked[j, i])
    witness = complex(density.domain.nodes[j, i])
    if max_curvature > tol:
        raise NotFlat(f"Curvature {K[j, i]:.4g} at {witness} exceeds tolerance {tol:.3g}",
                      witness=witness, curvature=float(K[j, i]))

    alpha = (pair.sup + pair.inf) / 2
    direction = gamma1.v[0] / abs(gamma1.v[0])
    logger.info(f"✅ [STRIP] flat strip of width {alpha:.6f}, max |K|={max_curvature:.2e}")
    return FlatStrip(gamma1, gamma2, float(alpha), complex(gamma1.z[0]), complex(direction),
                     max_curvature, witness, pair.horizon, region, float(tol))
