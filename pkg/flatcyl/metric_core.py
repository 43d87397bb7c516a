"""
Densités conformes et champs de tenseurs sur des domaines plans.

Une densité rho définit la métrique rho^2 <.,.> ; sa courbure est
K = -Delta log rho / rho^2. Les densités échantillonnées sont stockées
sous forme de log rho pour que le laplacien et les contrôles de positivité
soient directs.
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np
from scipy import ndimage
from scipy.interpolate import RectBivariateSpline

from .config import Config
from .errors import (
    InvalidDomain,
    MapsOutsideDomain,
    MetricError,
    NonPositiveDensity,
    NotPositiveDefinite,
    StencilOutOfDomain,
)
from .expression import compile_density

logger = logging.getLogger(__name__)

DOMAIN_KINDS = ("disc", "upper-half-plane", "annulus", "rectangle-grid")


# ============================================================================
# Domaines
# ============================================================================

@dataclass(frozen=True)
class Domain:
    """
    Domaine plan muni d'une grille cartésienne uniforme.

    Le noeud (j, i) est en x0 + i*h + 1j*(y0 + j*h) ; les tableaux sont
    indexés [ligne j, colonne i]. ``bounds`` dépend du type :
    disc (cx, cy, R), annulus (r_in, r_out) centré en 0,
    rectangle-grid et upper-half-plane (x_min, x_max, y_min, y_max).
    """
    kind: str
    bounds: Tuple[float, ...]
    x0: float
    y0: float
    h: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise InvalidDomain(f"Unknown domain kind {self.kind!r}, expected one of {DOMAIN_KINDS}")
        if not self.h > 0:
            raise InvalidDomain(f"Grid spacing must be positive, got {self.h}")
        if self.nx < 8 or self.ny < 8:
            raise InvalidDomain(f"Grid must be at least 8x8, got {self.nx}x{self.ny}")
        if self.kind == "disc" and not self.bounds[2] > 0:
            raise InvalidDomain("Disc radius must be positive")
        if self.kind == "annulus" and not 0 < self.bounds[0] < self.bounds[1]:
            raise InvalidDomain(f"Annulus radii must satisfy 0 < r_in < r_out, got {self.bounds}")
        if self.kind == "upper-half-plane" and self.bounds[2] < 0:
            raise InvalidDomain("Upper half-plane window must have y_min >= 0")

    # ------------------------------------------------------------------
    # Constructeurs
    # ------------------------------------------------------------------

    @classmethod
    def disc(cls, radius: float = 1.0, n: Optional[int] = None, center: complex = 0j) -> "Domain":
        """Disque de rayon ``radius`` sur une grille n x n centrée sur les cellules."""
        n = n or Config.GRID_SIZE
        h = 2.0 * radius / n
        c = complex(center)
        return cls("disc", (c.real, c.imag, float(radius)),
                   c.real - radius + h / 2, c.imag - radius + h / 2, h, n, n)

    @classmethod
    def annulus(cls, inner: float, outer: float, n: Optional[int] = None) -> "Domain":
        """Couronne inner < |z| < outer."""
        n = n or Config.GRID_SIZE
        h = 2.0 * outer / n
        return cls("annulus", (float(inner), float(outer)),
                   -outer + h / 2, -outer + h / 2, h, n, n)

    @classmethod
    def rectangle(cls, x_min: float, x_max: float, y_min: float, y_max: float,
                  nx: Optional[int] = None) -> "Domain":
        """Rectangle ; le pas est fixé par nx et ny s'en déduit."""
        nx = nx or Config.GRID_SIZE
        h = (x_max - x_min) / nx
        ny = int(round((y_max - y_min) / h))
        y_max = y_min + ny * h
        return cls("rectangle-grid", (float(x_min), float(x_max), float(y_min), float(y_max)),
                   x_min + h / 2, y_min + h / 2, h, nx, ny)

    @classmethod
    def upper_half_plane(cls, x_min: float, x_max: float, y_min: float, y_max: float,
                         nx: Optional[int] = None) -> "Domain":
        """Fenêtre rectangulaire du demi-plan supérieur."""
        base = cls.rectangle(x_min, x_max, y_min, y_max, nx)
        return cls("upper-half-plane", base.bounds, base.x0, base.y0, base.h, base.nx, base.ny)

    @classmethod
    def from_header(cls, nx: int, ny: int, x0: float, y0: float, h: float,
                    kind: str = "rectangle-grid", bounds: Optional[Tuple[float, ...]] = None) -> "Domain":
        """Domaine décrit par l'en-tête d'un fichier de grille (premier noeud en x0, y0)."""
        if bounds is None:
            bounds = (x0 - h / 2, x0 + (nx - 0.5) * h, y0 - h / 2, y0 + (ny - 0.5) * h)
        return cls(kind, tuple(float(b) for b in bounds), float(x0), float(y0), float(h), int(nx), int(ny))

    # ------------------------------------------------------------------
    # Géométrie
    # ------------------------------------------------------------------

    @cached_property
    def xs(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.nx)

    @cached_property
    def ys(self) -> np.ndarray:
        return self.y0 + self.h * np.arange(self.ny)

    @cached_property
    def nodes(self) -> np.ndarray:
        """Positions complexes des noeuds, tableau (ny, nx)."""
        return self.xs[np.newaxis, :] + 1j * self.ys[:, np.newaxis]

    @property
    def scale(self) -> float:
        """Longueur caractéristique (plus grand côté de la boîte englobante)."""
        return self.h * max(self.nx, self.ny)

    def contains(self, z) -> np.ndarray:
        """Appartenance stricte au domaine mathématique."""
        z = np.asarray(z, dtype=complex)
        if self.kind == "disc":
            cx, cy, r = self.bounds
            return np.abs(z - complex(cx, cy)) < r
        if self.kind == "annulus":
            r_in, r_out = self.bounds
            modulus = np.abs(z)
            return (modulus > r_in) & (modulus < r_out)
        x_min, x_max, y_min, y_max = self.bounds
        inside = (z.real > x_min) & (z.real < x_max) & (z.imag > y_min) & (z.imag < y_max)
        if self.kind == "upper-half-plane":
            inside &= z.imag > 0
        return inside

    @cached_property
    def mask(self) -> np.ndarray:
        """Noeuds de la grille situés dans le domaine."""
        return self.contains(self.nodes)

    @cached_property
    def stencil_mask(self) -> np.ndarray:
        """Noeuds dont le stencil à 5 points est entièrement dans le domaine."""
        m = self.mask
        out = np.zeros_like(m)
        out[1:-1, 1:-1] = m[1:-1, 1:-1] & m[1:-1, 2:] & m[1:-1, :-2] & m[2:, 1:-1] & m[:-2, 1:-1]
        return out

    def index_of(self, z: complex) -> Tuple[int, int]:
        """Indices (j, i) du noeud le plus proche."""
        i = int(round((z.real - self.x0) / self.h))
        j = int(round((z.imag - self.y0) / self.h))
        return j, i


# ============================================================================
# Densités conformes
# ============================================================================

class ConformalDensity:
    """
    Densité conforme rho > 0 sur un domaine.

    Deux représentations : évaluateur en forme close (``rho_fn``, gradient
    optionnel ``grad_log_fn``) ou échantillons de log rho sur la grille.
    """

    def __init__(
        self,
        domain: Domain,
        log_values: Optional[np.ndarray] = None,
        rho_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        grad_log_fn: Optional[Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]] = None,
        label: str = "",
        support: Optional[np.ndarray] = None,
    ):
        if (log_values is None) == (rho_fn is None):
            raise MetricError("Provide exactly one of log_values or rho_fn")
        self.domain = domain
        self.label = label
        self._rho_fn = rho_fn
        self._grad_log_fn = grad_log_fn
        self._log_values = None
        if log_values is not None:
            values = np.array(log_values, dtype=float)
            if values.shape != (domain.ny, domain.nx):
                raise MetricError(f"Grid shape {values.shape} does not match domain {(domain.ny, domain.nx)}")
            if not np.all(np.isfinite(values)):
                raise NonPositiveDensity("Grid-sampled log density contains non-finite samples")
            values.setflags(write=False)
            self._log_values = values
        self._support = None if support is None else np.asarray(support, dtype=bool)

    # ------------------------------------------------------------------
    # Accès
    # ------------------------------------------------------------------

    @property
    def is_grid(self) -> bool:
        return self._log_values is not None

    @property
    def support(self) -> np.ndarray:
        """Noeuds où la densité est significative (masque du domaine par défaut)."""
        if self._support is None:
            return self.domain.mask
        return self._support & self.domain.mask

    @cached_property
    def log_grid(self) -> np.ndarray:
        """log rho aux noeuds (NaN hors du domaine pour une forme close)."""
        if self.is_grid:
            return self._log_values
        nodes = self.domain.nodes
        out = np.full(nodes.shape, np.nan)
        mask = self.domain.mask
        values = self._rho_fn(nodes[mask])
        if np.any(~np.isfinite(values)) or np.any(values <= 0):
            raise NonPositiveDensity(f"Density {self.label!r} is not positive on the domain")
        out[mask] = np.log(values)
        out.setflags(write=False)
        return out

    @cached_property
    def _spline(self) -> RectBivariateSpline:
        # RectBivariateSpline attend (y, x) pour un tableau indexé [j, i]
        return RectBivariateSpline(self.domain.ys, self.domain.xs, self._log_values, kx=3, ky=3)

    def log_rho(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self.is_grid:
            return self._spline.ev(z.imag, z.real)
        values = self._rho_fn(z)
        if np.any(~np.isfinite(values)) or np.any(values <= 0):
            raise NonPositiveDensity(f"Density {self.label!r} is not positive at the requested points")
        return np.log(values)

    def rho(self, z) -> np.ndarray:
        return np.exp(self.log_rho(z))

    def grad_log_rho(self, z) -> Tuple[np.ndarray, np.ndarray]:
        """(d/dx, d/dy) de log rho : exact si disponible, sinon différences centrées."""
        z = np.asarray(z, dtype=complex)
        if self.is_grid:
            return (self._spline.ev(z.imag, z.real, dy=1),
                    self._spline.ev(z.imag, z.real, dx=1))
        if self._grad_log_fn is not None:
            return self._grad_log_fn(z)
        step = Config.DIFF_STEP * self.domain.scale
        gx = (self.log_rho(z + step) - self.log_rho(z - step)) / (2 * step)
        gy = (self.log_rho(z + 1j * step) - self.log_rho(z - 1j * step)) / (2 * step)
        return gx, gy

    def mixed_log_rho(self, z) -> np.ndarray:
        """Dérivée croisée d^2 log rho / dx dy."""
        z = np.asarray(z, dtype=complex)
        if self.is_grid:
            return self._spline.ev(z.imag, z.real, dx=1, dy=1)
        step = Config.DIFF_STEP * self.domain.scale
        gx_up, _ = self.grad_log_rho(z + 1j * step)
        gx_down, _ = self.grad_log_rho(z - 1j * step)
        return (gx_up - gx_down) / (2 * step)

    def scaled(self, s: float) -> "ConformalDensity":
        """Densité s * rho."""
        if not s > 0:
            raise NonPositiveDensity(f"Scale factor must be positive, got {s}")
        if self.is_grid:
            return ConformalDensity(self.domain, log_values=self._log_values + np.log(s),
                                    label=f"{s}*{self.label}", support=self._support)
        rho_fn = self._rho_fn
        return ConformalDensity(self.domain, rho_fn=lambda z: s * rho_fn(z),
                                grad_log_fn=self._grad_log_fn, label=f"{s}*{self.label}",
                                support=self._support)

    def sampled(self) -> "ConformalDensity":
        """
        Version échantillonnée sur la grille.

        Hors du domaine, log rho est prolongé par la valeur du noeud intérieur
        le plus proche ; le support reste le masque du domaine.
        """
        if self.is_grid:
            return self
        L = self.log_grid
        mask = self.domain.mask
        if not mask.all():
            _, (jj, ii) = ndimage.distance_transform_edt(~mask, return_indices=True)
            L = L[jj, ii]
        return ConformalDensity(self.domain, log_values=L, label=self.label, support=self._support)


# ============================================================================
# Catalogue de densités
# ============================================================================

def constant_density(domain: Domain, c: float = 1.0) -> ConformalDensity:
    """rho = c."""
    if not c > 0:
        raise NonPositiveDensity(f"Constant density must be positive, got {c}")
    return ConformalDensity(
        domain,
        rho_fn=lambda z: np.full(np.shape(z), float(c)),
        grad_log_fn=lambda z: (np.zeros(np.shape(z)), np.zeros(np.shape(z))),
        label=f"constant({c})",
    )


def hyperbolic_disc_density(domain: Domain) -> ConformalDensity:
    """rho = 2 / (1 - |z|^2), courbure -1."""
    def rho(z):
        return 2.0 / (1.0 - np.abs(z) ** 2)

    def grad(z):
        factor = 2.0 / (1.0 - np.abs(z) ** 2)
        return factor * np.real(z), factor * np.imag(z)

    return ConformalDensity(domain, rho_fn=rho, grad_log_fn=grad, label="hyperbolic-disc")


def upper_half_plane_density(domain: Domain) -> ConformalDensity:
    """rho = 1 / Im z, courbure -1."""
    def grad(z):
        return np.zeros(np.shape(z)), -1.0 / np.imag(z)

    return ConformalDensity(domain, rho_fn=lambda z: 1.0 / np.imag(z), grad_log_fn=grad,
                            label="hyperbolic-half-plane")


def flat_annulus_density(domain: Domain) -> ConformalDensity:
    """rho = 1 / |z| : cylindre plat de circonférence 2 pi."""
    def grad(z):
        modulus2 = np.abs(z) ** 2
        return -np.real(z) / modulus2, -np.imag(z) / modulus2

    return ConformalDensity(domain, rho_fn=lambda z: 1.0 / np.abs(z), grad_log_fn=grad,
                            label="flat-annulus")


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """Transition C-infini de 0 (t <= 0) à 1 (t >= 1)."""
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def flat_band_density(domain: Domain, half_width: float = 0.2, blend: float = 0.2) -> ConformalDensity:
    """
    Densité hyperbolique hors d'une bande verticale, constante sur |Re z| <= half_width.

    Le raccord se fait sur half_width < |Re z| < half_width + blend.
    """
    level = np.log(2.0)

    def rho(z):
        chi = 1.0 - _smooth_step((np.abs(np.real(z)) - half_width) / blend)
        log_hyp = np.log(2.0 / (1.0 - np.abs(z) ** 2))
        return np.exp((1.0 - chi) * log_hyp + chi * level)

    return ConformalDensity(domain, rho_fn=rho, label="flat-band")


def expression_density(domain: Domain, formula: str) -> ConformalDensity:
    """Densité donnée par une formule (voir flatcyl.expression)."""
    compiled = compile_density(formula)
    return ConformalDensity(domain, rho_fn=compiled.rho, grad_log_fn=compiled.grad_log, label=formula)


def grid_density(domain: Domain, log_values: np.ndarray, label: str = "grid") -> ConformalDensity:
    """Densité échantillonnée à partir de log rho."""
    return ConformalDensity(domain, log_values=log_values, label=label)


# ============================================================================
# Champs de tenseurs
# ============================================================================

TensorFn = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray, np.ndarray]]


class MetricTensorField:
    """Champ de matrices symétriques définies positives A = [[E, F], [F, G]]."""

    def __init__(self, domain: Domain, E: np.ndarray, F: np.ndarray, G: np.ndarray,
                 fn: Optional[TensorFn] = None):
        self.domain = domain
        self.E, self.F, self.G = (np.asarray(c, dtype=float) for c in (E, F, G))
        self._fn = fn
        mask = domain.mask
        E_m, F_m, G_m = self.E[mask], self.F[mask], self.G[mask]
        if np.any(~np.isfinite(E_m)) or np.any(~np.isfinite(F_m)) or np.any(~np.isfinite(G_m)):
            raise NotPositiveDefinite("Tensor field contains non-finite samples")
        if np.any(E_m <= 0) or np.any(E_m * G_m - F_m ** 2 <= 0):
            raise NotPositiveDefinite("Tensor field is not positive definite on the domain")

    @classmethod
    def from_function(cls, domain: Domain, fn: TensorFn) -> "MetricTensorField":
        nodes = domain.nodes
        E = np.full(nodes.shape, np.nan)
        F = np.full(nodes.shape, np.nan)
        G = np.full(nodes.shape, np.nan)
        mask = domain.mask
        E[mask], F[mask], G[mask] = (np.asarray(c, dtype=float) + np.zeros(mask.sum()) for c in fn(nodes[mask]))
        return cls(domain, E, F, G, fn=fn)

    @classmethod
    def constant(cls, domain: Domain, E: float, F: float, G: float) -> "MetricTensorField":
        return cls.from_function(domain, lambda z: (np.full(np.shape(z), E), np.full(np.shape(z), F),
                                                    np.full(np.shape(z), G)))

    @classmethod
    def conformal(cls, density: ConformalDensity) -> "MetricTensorField":
        """A = rho^2 I."""
        def fn(z):
            r2 = density.rho(z) ** 2
            return r2, np.zeros(np.shape(z)), r2
        return cls.from_function(density.domain, fn)

    @classmethod
    def from_jacobian(cls, domain: Domain, jacobian: Callable[[np.ndarray], np.ndarray]) -> "MetricTensorField":
        """A = J^t J où jacobian(z) renvoie (ux, uy, vx, vy)."""
        def fn(z):
            ux, uy, vx, vy = jacobian(z)
            return ux ** 2 + vx ** 2, ux * uy + vx * vy, uy ** 2 + vy ** 2
        return cls.from_function(domain, fn)

    def evaluate(self, z) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(E, F, G) aux points z (évaluateur exact, sinon splines)."""
        z = np.asarray(z, dtype=complex)
        if self._fn is not None:
            return tuple(np.asarray(c, dtype=float) + np.zeros(z.shape) for c in self._fn(z))
        return tuple(self._splines[k].ev(z.imag, z.real) for k in range(3))

    @cached_property
    def _splines(self):
        return [RectBivariateSpline(self.domain.ys, self.domain.xs, c, kx=3, ky=3)
                for c in (self.E, self.F, self.G)]


# ============================================================================
# Transformations de Möbius
# ============================================================================

@dataclass(frozen=True)
class MoebiusMap:
    """z -> (a z + b) / (c z + d) avec ad - bc != 0."""
    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        if abs(self.a * self.d - self.b * self.c) == 0:
            raise MetricError("Moebius map must satisfy ad - bc != 0")

    @classmethod
    def identity(cls) -> "MoebiusMap":
        return cls(1, 0, 0, 1)

    @classmethod
    def rotation(cls, theta: float) -> "MoebiusMap":
        return cls(complex(np.exp(1j * theta)), 0, 0, 1)

    @classmethod
    def translation(cls, t: complex) -> "MoebiusMap":
        return cls(1, complex(t), 0, 1)

    @classmethod
    def dilation(cls, r: float) -> "MoebiusMap":
        return cls(complex(r), 0, 0, 1)

    @classmethod
    def disc_automorphism(cls, z0: complex, theta: float = 0.0) -> "MoebiusMap":
        """e^{i theta} (z - z0) / (1 - conj(z0) z)."""
        u = complex(np.exp(1j * theta))
        z0 = complex(z0)
        return cls(u, -u * z0, -z0.conjugate(), 1)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return (self.a * z + self.b) / (self.c * z + self.d)

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        return (self.a * self.d - self.b * self.c) / (self.c * z + self.d) ** 2

    def compose(self, other: "MoebiusMap") -> "MoebiusMap":
        """self o other."""
        return MoebiusMap(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "MoebiusMap":
        return MoebiusMap(self.d, -self.b, -self.c, self.a)

    def maps_into(self, domain: Domain, samples) -> bool:
        return bool(np.all(domain.contains(self(samples))))


# ============================================================================
# Opérations
# ============================================================================

def curvature(density: ConformalDensity, z: complex) -> float:
    """
    Courbure K(z) = -Delta log rho(z) / rho(z)^2.

    Grille : laplacien à 5 points au noeud le plus proche.
    Forme close : différences centrées de pas Config.DIFF_STEP * échelle.

    Raises:
        StencilOutOfDomain: Si z est à moins d'un pas du bord
        NonPositiveDensity: Si un échantillon du stencil est <= 0
    """
    z = complex(z)
    domain = density.domain
    if density.is_grid:
        j, i = domain.index_of(z)
        if not (1 <= i < domain.nx - 1 and 1 <= j < domain.ny - 1) or not domain.stencil_mask[j, i]:
            raise StencilOutOfDomain(f"No full 5-point stencil at z={z}")
        L = density.log_grid
        lap = (L[j, i + 1] + L[j, i - 1] + L[j + 1, i] + L[j - 1, i] - 4 * L[j, i]) / domain.h ** 2
        return float(-lap / np.exp(2 * L[j, i]))

    ring = z + domain.h * np.array([1, -1, 1j, -1j])
    if not domain.contains(z) or not np.all(domain.contains(ring)):
        raise StencilOutOfDomain(f"z={z} is within one grid spacing of the boundary")
    step = Config.DIFF_STEP * domain.scale
    points = z + step * np.array([0, 1, -1, 1j, -1j])
    values = density.rho(points)  # NonPositiveDensity si besoin
    L = np.log(values)
    lap = (L[1] + L[2] + L[3] + L[4] - 4 * L[0]) / step ** 2
    return float(-lap / values[0] ** 2)


def curvature_field(density: ConformalDensity) -> np.ndarray:
    """Courbure aux noeuds de la grille (NaN sans stencil complet)."""
    domain = density.domain
    L = density.log_grid
    out = np.full(L.shape, np.nan)
    lap = (L[1:-1, 2:] + L[1:-1, :-2] + L[2:, 1:-1] + L[:-2, 1:-1] - 4 * L[1:-1, 1:-1]) / domain.h ** 2
    out[1:-1, 1:-1] = -lap / np.exp(2 * L[1:-1, 1:-1])
    out[~domain.stencil_mask] = np.nan
    return out


def equivariance_residual(density: ConformalDensity, M: MoebiusMap, samples) -> float:
    """
    max |rho(M(z)) |M'(z)| - rho(z)| / rho(z) sur les échantillons.

    Raises:
        MapsOutsideDomain: Si M(z) quitte le domaine
    """
    samples = np.atleast_1d(np.asarray(samples, dtype=complex))
    images = M(samples)
    if not np.all(density.domain.contains(images)):
        raise MapsOutsideDomain(f"Moebius map sends samples outside the {density.domain.kind} domain")
    rho = density.rho(samples)
    pushed = density.rho(images) * np.abs(M.derivative(samples))
    return float(np.max(np.abs(pushed - rho) / rho))


def tensor_equivariance_residual(A: MetricTensorField, M: MoebiusMap, samples=None) -> float:
    """
    max || D^t A(M(z)) D - A(z) ||_2 où D est la matrice de la multiplication par M'(z).

    Par défaut les échantillons sont les noeuds du domaine.
    """
    if samples is None:
        samples = A.domain.nodes[A.domain.mask]
    samples = np.atleast_1d(np.asarray(samples, dtype=complex))
    images = M(samples)
    if not np.all(A.domain.contains(images)):
        raise MapsOutsideDomain(f"Moebius map sends samples outside the {A.domain.kind} domain")
    dm = M.derivative(samples)
    p, q = dm.real, dm.imag
    E1, F1, G1 = A.evaluate(images)
    E0, F0, G0 = A.evaluate(samples)
    # D = [[p, -q], [q, p]] ; D^t A D
    E2 = p * (p * E1 + q * F1) + q * (p * F1 + q * G1)
    F2 = p * (-q * E1 + p * F1) + q * (-q * F1 + p * G1)
    G2 = -q * (-q * E1 + p * F1) + p * (-q * F1 + p * G1)
    dE, dF, dG = E2 - E0, F2 - F0, G2 - G0
    spectral = np.abs(dE + dG) / 2 + np.sqrt(((dE - dG) / 2) ** 2 + dF ** 2)
    return float(np.max(spectral))


class FlatLocus(NamedTuple):
    """Noeuds de courbure |K| <= tol et leurs composantes connexes."""
    mask: np.ndarray
    labels: np.ndarray
    count: int
    tol: float

    def component_at(self, domain: Domain, z: complex) -> np.ndarray:
        j, i = domain.index_of(complex(z))
        label = self.labels[j, i]
        if label == 0:
            return np.zeros_like(self.mask)
        return self.labels == label


def default_flat_tolerance(density: ConformalDensity) -> float:
    """10 h^2 max |d^2 log rho| estimé par différences secondes."""
    L = density.log_grid
    stencil = density.domain.stencil_mask
    dxx = np.full(L.shape, np.nan)
    dyy = np.full(L.shape, np.nan)
    dxx[:, 1:-1] = L[:, 2:] - 2 * L[:, 1:-1] + L[:, :-2]
    dyy[1:-1, :] = L[2:, :] - 2 * L[1:-1, :] + L[:-2, :]
    second = np.maximum(np.abs(dxx), np.abs(dyy))[stencil]
    if second.size == 0:
        return 0.0
    # second contient déjà h^2 * d^2 log rho
    return float(10.0 * np.max(second))


def flat_locus(density: ConformalDensity, tol: Optional[float] = None) -> FlatLocus:
    """Masque des noeuds intérieurs plats et étiquetage des composantes."""
    if tol is None:
        tol = default_flat_tolerance(density)
    K = curvature_field(density)
    mask = np.zeros(K.shape, dtype=bool)
    valid = np.isfinite(K)
    mask[valid] = np.abs(K[valid]) <= tol
    labels, count = ndimage.label(mask)
    logger.info(f"🔎 [FLAT] {int(mask.sum())} flat nodes in {count} component(s), tol={tol:.3g}")
    return FlatLocus(mask=mask, labels=labels, count=int(count), tol=float(tol))


def area(density: ConformalDensity, region: Optional[np.ndarray] = None) -> float:
    """Somme de rho^2 h^2 sur la région (ordre ligne par ligne)."""
    domain = density.domain
    mask = domain.mask if region is None else (np.asarray(region, dtype=bool) & domain.mask)
    values = np.exp(2 * density.log_grid[mask])
    return float(np.sum(values) * domain.h ** 2)
