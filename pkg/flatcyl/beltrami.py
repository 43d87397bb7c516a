"""
Coefficients de Beltrami et aplatissement conforme.

Chaîne complète : tenseur A -> dilatation complexe mu_A -> coefficient mu
(dilatation de la racine carrée de A) -> solution w de dbar w = mu d w ->
densité conforme rho telle que A = rho^2(w) (Dw)^t Dw.
"""
import logging
from typing import Callable, NamedTuple, Optional, Tuple, Union

import numpy as np
from scipy import fft, sparse
from scipy.interpolate import RectBivariateSpline, griddata
from scipy.sparse.linalg import lsqr

from .config import Config
from .errors import (
    DegenerateDilation,
    DegenerateJacobian,
    DilationNotStrictlyBounded,
    FieldShapeMismatch,
    InvalidNormalization,
    NearlyDegenerateField,
    NotPositiveDefinite,
    SingularMap,
    SolverDiverged,
)
from .metric_core import ConformalDensity, Domain, MetricTensorField, MoebiusMap

logger = logging.getLogger(__name__)


class LinearDilation(NamedTuple):
    """L(v) = a v + b conj(v), mu = b / a."""
    a: complex
    b: complex
    mu: complex


class SupNormBound(NamedTuple):
    n: float
    bound: float


# ============================================================================
# Dilatations
# ============================================================================

def complex_dilation_linear(L) -> LinearDilation:
    """
    Dilatation complexe d'une application linéaire réelle 2x2.

    Args:
        L: Matrice 2x2 agissant sur (x, y)

    Returns:
        LinearDilation(a, b, mu)

    Raises:
        SingularMap: Si det L = 0
        DegenerateDilation: Si a = 0 (application anti-conforme)
    """
    L = np.asarray(L, dtype=float)
    if L.shape != (2, 2):
        raise SingularMap(f"Expected a 2x2 matrix, got shape {L.shape}")
    if np.linalg.det(L) == 0:
        raise SingularMap("Linear map is singular (det L = 0)")
    a = complex((L[0, 0] + L[1, 1]) / 2, (L[1, 0] - L[0, 1]) / 2)
    b = complex((L[0, 0] - L[1, 1]) / 2, (L[1, 0] + L[0, 1]) / 2)
    if a == 0:
        raise DegenerateDilation("Linear map is anti-conformal (a = 0)")
    return LinearDilation(a=a, b=b, mu=b / a)


def dilation_of_tensor(A: MetricTensorField, z) -> Union[complex, np.ndarray]:
    """
    mu_A(z) = ((E - G) + 2iF) / (E + G).

    Raises:
        NotPositiveDefinite: Si A(z) n'est pas défini positif
    """
    scalar = np.ndim(z) == 0
    E, F, G = A.evaluate(np.atleast_1d(np.asarray(z, dtype=complex)))
    if np.any(E <= 0) or np.any(E * G - F ** 2 <= 0):
        raise NotPositiveDefinite(f"Tensor is not positive definite at {z}")
    mu = ((E - G) + 2j * F) / (E + G)
    return complex(mu[0]) if scalar else mu


def mu_from_dilation(mu_A):
    """
    Coefficient de la racine carrée : (mu_A / |mu_A|^2)(1 - sqrt(1 - |mu_A|^2)), 0 en 0.

    Raises:
        DilationNotStrictlyBounded: Si |mu_A| >= 1 quelque part
    """
    scalar = np.ndim(mu_A) == 0
    m = np.atleast_1d(np.asarray(mu_A, dtype=complex))
    modulus2 = np.abs(m) ** 2
    if np.any(modulus2 >= 1):
        raise DilationNotStrictlyBounded(f"|mu_A| must be < 1, got max {np.sqrt(modulus2.max()):.6g}")
    out = np.zeros_like(m)
    nz = modulus2 > 0
    out[nz] = m[nz] / modulus2[nz] * (1 - np.sqrt(1 - modulus2[nz]))
    return complex(out[0]) if scalar else out


def sup_norm_bound_check(A: MetricTensorField) -> SupNormBound:
    """
    n = max |mu_A| sur les noeuds du domaine et bound = (1 - sqrt(1 - n^2)) / n.

    Par convention (0, 0) si toutes les dilatations sont nulles.
    """
    samples = A.domain.nodes[A.domain.mask]
    mu_A = dilation_of_tensor(A, samples)
    n = float(np.max(np.abs(mu_A)))
    if n == 0:
        return SupNormBound(0.0, 0.0)
    bound = float((1 - np.sqrt(1 - n ** 2)) / n)
    mu_sup = float(np.max(np.abs(mu_from_dilation(mu_A))))
    assert mu_sup <= bound * (1 + 1e-12) and bound < n < 1, \
        f"Sup-norm chain violated: |mu|={mu_sup}, bound={bound}, n={n}"
    return SupNormBound(n, bound)


# ============================================================================
# Champs de Beltrami
# ============================================================================

class BeltramiField:
    """Coefficient mu sur toute la grille englobante du domaine."""

    def __init__(self, domain: Domain, mu: np.ndarray,
                 evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = None):
        mu = np.array(mu, dtype=complex)
        if mu.shape != (domain.ny, domain.nx):
            raise FieldShapeMismatch(f"mu shape {mu.shape} does not match domain {(domain.ny, domain.nx)}")
        if not np.all(np.isfinite(mu)):
            raise DilationNotStrictlyBounded("Beltrami field contains non-finite samples")
        self.domain = domain
        self.mu = mu
        self._evaluator = evaluator
        self.sup_norm = float(np.max(np.abs(mu)))
        if self.sup_norm >= 1:
            raise DilationNotStrictlyBounded(f"Beltrami field has sup norm {self.sup_norm:.6g} >= 1")

    @classmethod
    def from_function(cls, domain: Domain, fn: Callable[[np.ndarray], np.ndarray]) -> "BeltramiField":
        values = np.asarray(fn(domain.nodes), dtype=complex) + np.zeros(domain.nodes.shape)
        return cls(domain, values, evaluator=fn)

    @classmethod
    def from_tensor(cls, A: MetricTensorField) -> "BeltramiField":
        """mu = mu_from_dilation(mu_A) sur le domaine, 0 ailleurs."""
        domain = A.domain
        mu = np.zeros(domain.nodes.shape, dtype=complex)
        mask = domain.mask
        mu[mask] = mu_from_dilation(dilation_of_tensor(A, domain.nodes[mask]))

        def evaluator(z):
            return mu_from_dilation(dilation_of_tensor(A, z))

        return cls(domain, mu, evaluator=evaluator)

    def evaluate(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self._evaluator is not None:
            return np.asarray(self._evaluator(z), dtype=complex) + np.zeros(z.shape)
        ys, xs = self.domain.ys, self.domain.xs
        re = RectBivariateSpline(ys, xs, self.mu.real).ev(z.imag, z.real)
        im = RectBivariateSpline(ys, xs, self.mu.imag).ev(z.imag, z.real)
        return re + 1j * im


def beltrami_equivariance_residual(mu: Union[BeltramiField, Callable], M: MoebiusMap, samples) -> float:
    """max |mu(M z) conj(M'(z)) / M'(z) - mu(z)| sur les échantillons."""
    evaluate = mu.evaluate if isinstance(mu, BeltramiField) else mu
    samples = np.atleast_1d(np.asarray(samples, dtype=complex))
    dm = M.derivative(samples)
    pulled = np.asarray(evaluate(M(samples))) * np.conj(dm) / dm
    return float(np.max(np.abs(pulled - np.asarray(evaluate(samples)))))


# ============================================================================
# Applications de grille
# ============================================================================

def _centered_derivatives(w: np.ndarray, h: float) -> Tuple[np.ndarray, np.ndarray]:
    """d w et dbar w par différences centrées (ordre 2 décentré sur l'anneau extérieur)."""
    wy, wx = np.gradient(w, h, edge_order=2)
    return (wx - 1j * wy) / 2, (wx + 1j * wy) / 2


def equation_mask(domain: Domain) -> np.ndarray:
    """Noeuds du domaine où les deux différences sont centrées (hors anneau extérieur de la grille)."""
    out = domain.mask.copy()
    out[[0, -1], :] = False
    out[:, [0, -1]] = False
    return out


def _relative_residual(w: np.ndarray, mu: BeltramiField) -> float:
    dz, dzbar = _centered_derivatives(w, mu.domain.h)
    rows = equation_mask(mu.domain)
    return float(np.linalg.norm((dzbar - mu.mu * dz)[rows]) / np.linalg.norm(dz[rows]))


class GridMap:
    """
    Application w échantillonnée aux noeuds, avec ses dérivées d w et dbar w.

    Attributes:
        residual: Résidu relatif ||dbar w - mu d w|| / ||d w|| du solveur (NaN sinon)
        iterations: Nombre d'itérations du solveur (0 sinon)
    """

    def __init__(self, domain: Domain, w: np.ndarray, dz: np.ndarray, dzbar: np.ndarray,
                 residual: float = float("nan"), iterations: int = 0):
        self.domain = domain
        self.w = np.asarray(w, dtype=complex)
        self.dz = np.asarray(dz, dtype=complex)
        self.dzbar = np.asarray(dzbar, dtype=complex)
        self.residual = residual
        self.iterations = iterations
        interior = domain.mask
        bad = self.jacobian[interior] <= 0
        if np.any(bad):
            raise DegenerateJacobian(f"Jacobian is non-positive at {int(bad.sum())} interior node(s)")

    @classmethod
    def from_values(cls, domain: Domain, w: np.ndarray, residual: float = float("nan"),
                    iterations: int = 0) -> "GridMap":
        """Dérivées par différences centrées (ordre 2 au bord)."""
        w = np.asarray(w, dtype=complex)
        dz, dzbar = _centered_derivatives(w, domain.h)
        return cls(domain, w, dz, dzbar, residual=residual, iterations=iterations)

    @classmethod
    def from_function(cls, domain: Domain, fn: Callable[[np.ndarray], np.ndarray]) -> "GridMap":
        return cls.from_values(domain, fn(domain.nodes))

    @property
    def jacobian(self) -> np.ndarray:
        return np.abs(self.dz) ** 2 - np.abs(self.dzbar) ** 2

    @property
    def mu(self) -> np.ndarray:
        return self.dzbar / self.dz

    def finite_difference_residual(self, mu: BeltramiField) -> float:
        """||dbar w - mu d w|| / ||d w|| avec des différences centrées, sur equation_mask."""
        return _relative_residual(self.w, mu)


def _periodic_symbols(shape: Tuple[int, int], h: float) -> Tuple[np.ndarray, np.ndarray]:
    """Symboles de Fourier de d et dbar sur une boîte périodique."""
    ny, nx = shape
    kx = 2 * np.pi * fft.fftfreq(nx, d=h)[np.newaxis, :]
    ky = 2 * np.pi * fft.fftfreq(ny, d=h)[:, np.newaxis]
    d_symbol = (1j * kx + ky) / 2
    dbar_symbol = (1j * kx - ky) / 2
    return d_symbol, dbar_symbol


def _gradient_matrix(n: int, h: float) -> sparse.csr_matrix:
    """Matrice 1D de np.gradient(edge_order=2)."""
    rows, cols, vals = [], [], []
    for k in range(1, n - 1):
        rows += [k, k]
        cols += [k - 1, k + 1]
        vals += [-1.0, 1.0]
    rows += [0, 0, 0, n - 1, n - 1, n - 1]
    cols += [0, 1, 2, n - 1, n - 2, n - 3]
    vals += [-3.0, 4.0, -1.0, 3.0, -4.0, 1.0]
    return sparse.csr_matrix((np.array(vals) / (2 * h), (rows, cols)), shape=(n, n))


def _beltrami_operator(mu: BeltramiField) -> sparse.csr_matrix:
    """Opérateur dbar - mu d restreint aux lignes de equation_mask, sur w aplati en ordre C."""
    domain = mu.domain
    gx = sparse.kron(sparse.identity(domain.ny), _gradient_matrix(domain.nx, domain.h))
    gy = sparse.kron(_gradient_matrix(domain.ny, domain.h), sparse.identity(domain.nx))
    d = (gx - 1j * gy) / 2
    dbar = (gx + 1j * gy) / 2
    operator = (dbar - sparse.diags(mu.mu.ravel()) @ d).tocsr()
    return operator[np.flatnonzero(equation_mask(domain))]


def _refine(mu: BeltramiField, w: np.ndarray, tolerance: float, max_iters: int) -> Tuple[np.ndarray, int]:
    """
    Correction de norme minimale delta telle que L (w + delta) = 0 sur les lignes centrées.

    Le système sous-déterminé est de rang plein en lignes ; il est résolu par
    lsqr sur sa forme réelle [[Re L, -Im L], [Im L, Re L]].
    """
    L = _beltrami_operator(mu)
    n = w.size
    flat = w.ravel()
    rhs = -(L @ flat)
    d_norm = np.linalg.norm(_centered_derivatives(w, mu.domain.h)[0][equation_mask(mu.domain)])
    real_form = sparse.bmat([[L.real, -L.imag], [L.imag, L.real]]).tocsr()
    b = np.concatenate([rhs.real, rhs.imag])
    target = 0.5 * tolerance * d_norm
    result = lsqr(real_form, b, atol=1e-15, btol=target / np.linalg.norm(b), iter_lim=max_iters)
    delta, iterations = result[0], int(result[2])
    return (flat + delta[:n] + 1j * delta[n:]).reshape(w.shape), iterations


def solve_beltrami(
    mu: BeltramiField,
    normalization: Tuple[complex, complex, complex] = (0j, 0j, 1 + 0j),
    tolerance: Optional[float] = None,
    max_iters: Optional[int] = None,
) -> GridMap:
    """
    Résout dbar w = mu d w sur la grille.

    Première approximation spectrale : mu est prolongé par réflexion à une
    boîte périodique de taille impaire, où l'on cherche w = z + tau conj(z) + p
    avec p périodique. En posant sigma = dbar w, l'équation devient le point
    fixe sigma = mu (1 + S(sigma - <sigma>)) où S est la transformée de Beurling
    (multiplicateur unitaire), contractant de rapport sup|mu|.

    Si le résidu mesuré par différences centrées dépasse la tolérance, la
    solution est corrigée par moindres carrés creux sur les noeuds de
    equation_mask.

    Args:
        mu: Champ de Beltrami
        normalization: (z0, w0, direction) ; w(z0) = w0 et d w(z0) = direction
        tolerance: Résidu relatif cible (Config.SOLVER_TOLERANCE par défaut)
        max_iters: Budget d'itérations de chaque étape (10 sqrt(inconnues) par défaut)

    Returns:
        GridMap normalisée, dérivées par différences centrées

    Raises:
        NearlyDegenerateField: Si sup|mu| >= 1 - Config.DEGENERACY_GUARD
        InvalidNormalization: Si z0 est hors de la grille ou la direction nulle
        SolverDiverged: Si le résidu cible n'est pas atteint
        DegenerateJacobian: Si le jacobien s'annule à l'intérieur
    """
    domain = mu.domain
    if mu.sup_norm >= 1 - Config.DEGENERACY_GUARD:
        raise NearlyDegenerateField(
            f"sup|mu| = {mu.sup_norm:.4f} exceeds 1 - {Config.DEGENERACY_GUARD}"
        )
    z0, w0, direction = (complex(v) for v in normalization)
    ny, nx = domain.ny, domain.nx
    j, i = domain.index_of(z0)
    if not (0 <= i < nx and 0 <= j < ny):
        raise InvalidNormalization(f"Normalization point {z0} lies outside the grid")
    if direction == 0:
        raise InvalidNormalization("Normalization direction must be non-zero")
    direction = direction / abs(direction)

    tolerance = tolerance or Config.SOLVER_TOLERANCE
    box = np.pad(mu.mu, ((0, ny - 1), (0, nx - 1)), mode="reflect")
    if max_iters is None:
        max_iters = Config.SOLVER_MAX_ITERS or int(10 * np.sqrt(box.size))

    d_symbol, dbar_symbol = _periodic_symbols(box.shape, domain.h)
    beurling = np.zeros(box.shape, dtype=complex)
    nonzero = dbar_symbol != 0
    beurling[nonzero] = d_symbol[nonzero] / dbar_symbol[nonzero]

    def d_of(sigma):
        tau = sigma.mean()
        return 1 + fft.ifft2(beurling * fft.fft2(sigma - tau))

    sigma = box.copy()
    residual = np.inf
    iterations = 0
    for iterations in range(1, max_iters + 1):
        dw = d_of(sigma)
        updated = box * dw
        residual = float(np.linalg.norm(updated - sigma) / np.linalg.norm(dw))
        if residual <= tolerance:
            break
        sigma = updated
    else:
        raise SolverDiverged(
            f"Beltrami solve stalled at residual {residual:.3e} after {max_iters} iterations",
            residual=residual, iterations=max_iters,
        )

    tau = sigma.mean()
    p_hat = np.zeros(box.shape, dtype=complex)
    p_hat[nonzero] = fft.fft2(sigma - tau)[nonzero] / dbar_symbol[nonzero]
    p = fft.ifft2(p_hat)
    w = domain.nodes + tau * np.conj(domain.nodes) + p[:ny, :nx]

    measured = _relative_residual(w, mu)
    if measured > tolerance:
        logger.debug(f"[SOLVE] spectral residual {measured:.2e} above {tolerance:.0e}, refining")
        w, refinements = _refine(mu, w, tolerance, max_iters)
        iterations += refinements
        measured = _relative_residual(w, mu)
        if measured > tolerance:
            raise SolverDiverged(
                f"Beltrami refinement stalled at residual {measured:.3e} after {refinements} iterations",
                residual=measured, iterations=iterations,
            )

    dz = _centered_derivatives(w, domain.h)[0]
    scale = direction * np.conj(dz[j, i]) / abs(dz[j, i]) ** 2
    w = w0 + scale * (w - w[j, i])

    logger.info(f"✅ [SOLVE] converged in {iterations} iteration(s), residual={measured:.2e}")
    return GridMap.from_values(domain, w, residual=measured, iterations=iterations)


# ============================================================================
# Densité récupérée
# ============================================================================

def _image_domain(points: np.ndarray, n: int) -> Domain:
    x_min, x_max = float(points.real.min()), float(points.real.max())
    y_min, y_max = float(points.imag.min()), float(points.imag.max())
    h = max(x_max - x_min, y_max - y_min) / n
    nx = max(8, int(np.ceil((x_max - x_min) / h)))
    ny = max(8, int(np.ceil((y_max - y_min) / h)))
    return Domain.from_header(nx, ny, x_min + h / 2, y_min + h / 2, h)


def recover_density(A: MetricTensorField, w: GridMap, n: Optional[int] = None) -> ConformalDensity:
    """
    Densité rho sur l'image de w : rho^2(w(z)) = sqrt(det A(z)) / det D_z w.

    Les valeurs sont interpolées linéairement sur une grille rectangulaire
    couvrant l'image ; hors de l'enveloppe convexe on prend le plus proche
    voisin et le support de la densité retournée exclut ces noeuds.

    Raises:
        DegenerateJacobian: Si det Dw <= 0 sur le domaine
    """
    domain = w.domain
    mask = domain.mask
    jac = w.jacobian[mask]
    if np.any(jac <= 0):
        raise DegenerateJacobian("Cannot recover a density through a non-orientation-preserving map")
    E, F, G = A.evaluate(domain.nodes[mask])
    log_rho = 0.25 * np.log(E * G - F ** 2) - 0.5 * np.log(jac)

    images = w.w[mask]
    target = _image_domain(images, n or domain.nx)
    points = np.column_stack([images.real, images.imag])
    grid = (target.nodes.real, target.nodes.imag)
    linear = griddata(points, log_rho, grid, method="linear")
    support = np.isfinite(linear)
    nearest = griddata(points, log_rho, grid, method="nearest")
    values = np.where(support, linear, nearest)
    logger.info(f"✅ [RECOVER] density on {target.nx}x{target.ny} image grid, "
                f"{int(support.sum())} supported node(s)")
    return ConformalDensity(target, log_values=values, label="recovered", support=support)
