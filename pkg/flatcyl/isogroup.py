"""
Isométries directes du plan et classification des sous-groupes.

Une isométrie est z -> lambda z + a avec |lambda| = 1. Les rotations
construites à partir d'une fraction de tour gardent cette fraction exacte
(lambda = exp(2 i pi k/n)) ; la détection d'ordre fini passe d'abord par
ce canal.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import Config
from .errors import BadParameters, InconclusiveBudget, InvalidIsometry, NotCrystallographic

logger = logging.getLogger(__name__)

UNIT_TOL = 1e-12
KEY_QUANTUM = 1e-10
MAX_BALL_SIZE = 400_000
MAX_REDUCTION_ROUNDS = 256

EXCEPTIONAL_FAMILIES = ("Lambda0", "Lambda1", "Z2i", "Zminus", "Z2minus")
CASE_NUMBERS = {
    "Minimal": 1,
    "RotationMinimal": 2,
    "FiniteRotation": 3,
    "LineMinimal": 4,
    "Z": 5,
    "Z2": 6,
    "Exceptional": 7,
}
_FAMILY_BY_ORDER = {3: "Lambda1", 4: "Z2i", 6: "Lambda0"}


def _exp_turns(turns: Fraction) -> complex:
    """exp(2 i pi turns), exact sur les quarts de tour."""
    exact = {Fraction(0): 1 + 0j, Fraction(1, 4): 1j, Fraction(1, 2): -1 + 0j, Fraction(3, 4): -1j}
    if turns in exact:
        return exact[turns]
    return complex(np.exp(2j * np.pi * float(turns)))


# ============================================================================
# Isométries
# ============================================================================

@dataclass(frozen=True)
class PlaneIsometry:
    """
    Isométrie z -> lam z + a.

    Attributes:
        lam: Partie rotation (module 1)
        a: Partie translation
        turns: Fraction de tour exacte de la rotation, si connue
    """
    lam: complex = 1 + 0j
    a: complex = 0j
    turns: Optional[Fraction] = None

    def __post_init__(self):
        if self.turns is not None:
            turns = Fraction(self.turns) % 1
            object.__setattr__(self, "turns", turns)
            object.__setattr__(self, "lam", _exp_turns(turns))
        lam = complex(self.lam)
        if abs(abs(lam) - 1) > UNIT_TOL:
            raise InvalidIsometry(f"Rotation part must have modulus 1, got |lambda| = {abs(lam):.15g}")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "a", complex(self.a))

    # ------------------------------------------------------------------
    # Constructeurs
    # ------------------------------------------------------------------

    @classmethod
    def identity(cls) -> "PlaneIsometry":
        return cls(turns=Fraction(0))

    @classmethod
    def translation(cls, a: complex) -> "PlaneIsometry":
        return cls(a=a, turns=Fraction(0))

    @classmethod
    def rotation(cls, turns: Union[Fraction, str, int], center: complex = 0j) -> "PlaneIsometry":
        """Rotation exacte de ``turns`` tour(s) autour de ``center``."""
        turns = Fraction(turns) % 1
        lam = _exp_turns(turns)
        return cls(a=complex(center) * (1 - lam), turns=turns)

    @classmethod
    def rotation_by_angle(cls, theta: float, center: complex = 0j) -> "PlaneIsometry":
        lam = complex(np.exp(1j * theta))
        return cls(lam=lam, a=complex(center) * (1 - lam))

    # ------------------------------------------------------------------
    # Arithmétique
    # ------------------------------------------------------------------

    def __call__(self, z):
        return self.lam * np.asarray(z, dtype=complex) + self.a

    @property
    def is_exact(self) -> bool:
        return self.turns is not None

    def compose(self, other: "PlaneIsometry") -> "PlaneIsometry":
        """self o other."""
        a = self.lam * other.a + self.a
        if self.is_exact and other.is_exact:
            return PlaneIsometry(a=a, turns=self.turns + other.turns)
        lam = self.lam * other.lam
        return PlaneIsometry(lam=lam / abs(lam), a=a)

    def inverse(self) -> "PlaneIsometry":
        inv = self.lam.conjugate()
        if self.is_exact:
            return PlaneIsometry(a=-inv * self.a, turns=-self.turns)
        return PlaneIsometry(lam=inv, a=-inv * self.a)

    def conjugate(self, T: "PlaneIsometry") -> "PlaneIsometry":
        """self o T o self^-1."""
        return self.compose(T).compose(self.inverse())

    def is_translation(self, tol: float = UNIT_TOL) -> bool:
        if self.is_exact:
            return self.turns == 0
        return abs(self.lam - 1) <= tol

    def fixed_point(self) -> complex:
        """Centre a / (1 - lam) d'une rotation non triviale."""
        return self.a / (1 - self.lam)

    def key(self, quantum: float = KEY_QUANTUM) -> Tuple:
        """Clé de déduplication (fraction exacte ou lambda arrondi, puis a arrondi)."""
        translation = (int(round(self.a.real / quantum)), int(round(self.a.imag / quantum)))
        if self.is_exact:
            return ("exact", self.turns) + translation
        rotation = (int(round(self.lam.real / KEY_QUANTUM)), int(round(self.lam.imag / KEY_QUANTUM)))
        return ("float",) + rotation + translation

    def snapped(self, rotation_tol: Optional[float] = None) -> "PlaneIsometry":
        """Remplace lam par une fraction de tour exacte quand le test des réduites la reconnaît."""
        if self.is_exact:
            return self
        turns = rational_turns(self.lam, rotation_tol)
        if turns is None:
            return self
        return PlaneIsometry(a=self.a, turns=turns)

    def __str__(self) -> str:
        rot = f"e^(2ipi*{self.turns})" if self.is_exact and self.turns != 0 else (
            "" if self.is_exact else f"({self.lam.real:.6g}{self.lam.imag:+.6g}i)")
        return f"{rot}z + ({self.a.real:.6g}{self.a.imag:+.6g}i)"


def compose(S: PlaneIsometry, T: PlaneIsometry) -> PlaneIsometry:
    """S o T."""
    return S.compose(T)


def inverse(T: PlaneIsometry) -> PlaneIsometry:
    return T.inverse()


def conjugate(L: PlaneIsometry, T: PlaneIsometry) -> PlaneIsometry:
    """L o T o L^-1."""
    return L.conjugate(T)


def rotation_part(T: PlaneIsometry) -> complex:
    """d(T) = T'(0) = lambda."""
    return T.lam


def rational_turns(lam: complex, tol: Optional[float] = None,
                   max_denominator: Optional[int] = None) -> Optional[Fraction]:
    """
    Reconnaît arg(lam) / 2 pi comme une fraction p/q.

    Parcourt les réduites du développement en fraction continue et accepte la
    première p/q avec |x - p/q| <= tol / q^2 ; au-delà du dénominateur maximal
    l'angle est déclaré irrationnel (None).
    """
    tol = Config.ROTATION_TOL if tol is None else tol
    max_denominator = max_denominator or Config.MAX_DENOMINATOR
    x = (np.angle(lam) / (2 * np.pi)) % 1.0
    p_prev, q_prev, p, q = 0, 1, 1, 0
    rest = x
    for _ in range(64):
        digit = int(np.floor(rest))
        p_prev, q_prev, p, q = p, q, digit * p + p_prev, digit * q + q_prev
        if q > max_denominator:
            return None
        if abs(x - p / q) <= tol / q ** 2:
            return Fraction(p, q) % 1
        frac = rest - digit
        if frac <= 0:
            return Fraction(p, q) % 1
        rest = 1.0 / frac
    return None


# ============================================================================
# Réseaux de translations
# ============================================================================

@dataclass(frozen=True)
class TranslationLattice:
    """
    Sous-groupe discret de translations.

    En rang 2 la base canonique est (alpha, a) avec 0 < alpha <= |a|,
    |Re a| <= alpha/2, Im a > 0, exprimée dans le repère tourné par
    ``direction`` ; ``basis`` garde les vecteurs dans les coordonnées d'origine.
    """
    rank: int
    alpha: Optional[float] = None
    a: Optional[complex] = None
    direction: complex = 1 + 0j
    basis: Tuple[complex, ...] = ()
    reduced: bool = True

    def same_as(self, other: "TranslationLattice", rel_tol: float = 1e-6) -> bool:
        if not isinstance(other, TranslationLattice) or other.rank != self.rank:
            return False
        if self.rank == 0:
            return True
        scale = max(self.alpha, 1e-300)
        if abs(self.alpha - other.alpha) > rel_tol * scale:
            return False
        return self.rank == 1 or abs(self.a - other.a) <= rel_tol * scale


@dataclass(frozen=True)
class DenseSubgroup:
    """Translations denses le long d'une droite (kind='line', ``axis``) ou dans le plan."""
    kind: str
    axis: Optional[complex] = None

    def same_as(self, other, rel_tol: float = 1e-6) -> bool:
        if not isinstance(other, DenseSubgroup) or other.kind != self.kind:
            return False
        if self.kind == "plane":
            return True
        return abs((self.axis * np.conj(other.axis)).imag) <= 1e-3


KernelVerdict = Union[TranslationLattice, DenseSubgroup]


def _gauss_reduce(u: complex, v: complex) -> Tuple[complex, complex]:
    """Réduction de Lagrange : |u| <= |v| et |Re(v conj u)| <= |u|^2 / 2."""
    if abs(v) < abs(u):
        u, v = v, u
    for _ in range(MAX_REDUCTION_ROUNDS):
        q = round((v * u.conjugate()).real / abs(u) ** 2)
        v = v - q * u
        if v == 0 or abs(v) >= abs(u):
            break
        u, v = v, u
    return u, v


def _reduce_modulo(vectors: np.ndarray, basis: List[complex]) -> np.ndarray:
    """Restes de Babai des vecteurs modulo la base (rang 1 ou 2)."""
    if len(basis) == 1:
        b = basis[0]
        coeff = np.round((vectors * np.conj(b)).real / abs(b) ** 2)
        return vectors - coeff * b
    b1, b2 = basis
    M = np.array([[b1.real, b2.real], [b1.imag, b2.imag]])
    coords = np.linalg.solve(M, np.vstack([vectors.real, vectors.imag]))
    coords = np.round(coords)
    return vectors - coords[0] * b1 - coords[1] * b2


def _extract_lattice(vectors: np.ndarray, eps: float, resolution: float):
    """
    Base d'un ensemble fini de translations, ou direction d'effondrement.

    Returns:
        (base, None) si discret, (None, vecteur court) si un vecteur non nul
        plus court que ``resolution`` apparaît
    """
    vecs = vectors[np.abs(vectors) >= eps]
    for _ in range(MAX_REDUCTION_ROUNDS):
        if vecs.size == 0:
            return [], None
        vecs = vecs[np.argsort(np.abs(vecs), kind="stable")]
        if abs(vecs[0]) < resolution:
            return None, complex(vecs[0])
        b1 = complex(vecs[0])
        perp = np.abs((vecs * np.conj(b1)).imag) / abs(b1)
        off_line = np.nonzero(perp >= eps)[0]
        if off_line.size == 0:
            basis = [b1]
        else:
            u, v = _gauss_reduce(b1, complex(vecs[off_line[0]]))
            if abs(u) < resolution:
                return None, u
            basis = [u, v]
        rests = _reduce_modulo(vecs, basis)
        rests = rests[np.abs(rests) >= eps]
        if rests.size == 0:
            return basis, None
        vecs = np.concatenate([np.array(basis, dtype=complex), rests])
    return None, complex(vecs[0])


def _euclid_1d(values: np.ndarray, eps: float, resolution: float) -> Optional[float]:
    """Générateur d'un sous-groupe de R engendré par ``values`` ; None s'il est dense."""
    vals = np.abs(values[np.abs(values) >= eps])
    for _ in range(MAX_REDUCTION_ROUNDS):
        if vals.size == 0:
            return 0.0
        g = float(vals.min())
        if g < resolution:
            return None
        rests = vals - np.round(vals / g) * g
        rests = np.abs(rests[np.abs(rests) >= eps])
        if rests.size == 0:
            return g
        vals = np.concatenate([[g], rests])
    return None


def _canonical_lattice(basis: List[complex]) -> TranslationLattice:
    if not basis:
        return TranslationLattice(rank=0)
    u = basis[0]
    if u.real < -UNIT_TOL * abs(u) or (abs(u.real) <= UNIT_TOL * abs(u) and u.imag < 0):
        u = -u
    if len(basis) == 1:
        return TranslationLattice(rank=1, alpha=abs(u), direction=u / abs(u), basis=(u,))
    v = basis[1]
    tie = 1e-9
    if (v / u).imag < 0:
        v = -v
    v = v - round((v / u).real) * u
    tau = v / u
    if tau.real < -0.5 + tie:
        v, tau = v + u, tau + 1
    if abs(abs(tau) - 1) <= tie and tau.real < -tie:
        u, v = v, -u
        tau = v / u
    alpha = abs(u)
    return TranslationLattice(rank=2, alpha=alpha, a=complex(alpha * tau), direction=u / alpha, basis=(u, v))


def _kernel_verdict(translations: np.ndarray, scale: float, tol: Optional[float]) -> KernelVerdict:
    eps = max(tol if tol is not None else 0.0, Config.DISCRETENESS_TOL * scale)
    resolution = np.sqrt(eps * scale)
    basis, collapse = _extract_lattice(translations, eps, resolution)
    if collapse is None:
        return _canonical_lattice(basis)
    axis = collapse / abs(collapse)
    if axis.real < 0 or (axis.real == 0 and axis.imag < 0):
        axis = -axis
    perp = (translations * np.conj(axis)).imag
    if _euclid_1d(perp, eps, resolution) is None:
        return DenseSubgroup(kind="plane")
    return DenseSubgroup(kind="line", axis=complex(axis))


# ============================================================================
# Énumération des mots
# ============================================================================

@dataclass
class WordBall:
    """Éléments distincts de longueur de mot <= bound, en ordre BFS."""
    elements: List[PlaneIsometry] = field(default_factory=list)
    words: List[str] = field(default_factory=list)
    lengths: List[int] = field(default_factory=list)

    def up_to(self, bound: int) -> List[int]:
        return [k for k, n in enumerate(self.lengths) if n <= bound]


def enumerate_words(generators: Sequence[PlaneIsometry], word_bound: int,
                    quantum: float = KEY_QUANTUM) -> WordBall:
    """Parcours en largeur des mots en les générateurs et leurs inverses."""
    letters: List[Tuple[PlaneIsometry, str]] = []
    for k, g in enumerate(generators):
        letters.append((g, f"g{k}"))
        g_inv = g.inverse()
        if g_inv.key(quantum) != g.key(quantum):
            letters.append((g_inv, f"g{k}^-1"))

    identity = PlaneIsometry.identity()
    ball = WordBall([identity], ["e"], [0])
    seen: Dict[Tuple, int] = {identity.key(quantum): 0}
    frontier = [0]
    for length in range(1, word_bound + 1):
        next_frontier = []
        for idx in frontier:
            base, word = ball.elements[idx], ball.words[idx]
            for letter, name in letters:
                element = base.compose(letter)
                key = element.key(quantum)
                if key in seen:
                    continue
                seen[key] = len(ball.elements)
                next_frontier.append(len(ball.elements))
                ball.elements.append(element)
                ball.words.append(name if word == "e" else f"{word}*{name}")
                ball.lengths.append(length)
                if len(ball.elements) > MAX_BALL_SIZE:
                    raise InconclusiveBudget(
                        f"Word ball exceeds {MAX_BALL_SIZE} elements at length {length}", word_bound=length
                    )
        frontier = next_frontier
    return ball


def _generator_scale(generators: Sequence[PlaneIsometry]) -> float:
    scale = max((abs(g.a) for g in generators), default=0.0)
    return scale if scale > 0 else 1.0


def _translation_vectors(ball: WordBall, indices: List[int], tol: float) -> Tuple[np.ndarray, List[int]]:
    picked = [k for k in indices if ball.elements[k].is_translation(tol) and k != 0]
    return np.array([ball.elements[k].a for k in picked], dtype=complex), picked


def _stable_kernel(generators: Sequence[PlaneIsometry], word_bound: int,
                   tol: Optional[float]) -> Tuple[KernelVerdict, WordBall, List[int]]:
    if not generators:
        raise BadParameters("Generator list must not be empty")
    if word_bound < 4:
        raise BadParameters(f"word_bound must be >= 4, got {word_bound}")
    scale = _generator_scale(generators)
    quantum = max(KEY_QUANTUM, tol or 0.0)
    rotation_tol = max(UNIT_TOL, tol or 0.0)
    ball = enumerate_words(generators, word_bound + 2, quantum)

    verdicts = []
    for bound in (word_bound, word_bound + 2):
        vectors, picked = _translation_vectors(ball, ball.up_to(bound), rotation_tol)
        verdicts.append((_kernel_verdict(vectors, scale, tol), picked))
    (first, picked), (second, _) = verdicts
    if not first.same_as(second):
        raise InconclusiveBudget(
            f"Translation subgroup not stable between word bounds {word_bound} and {word_bound + 2}: "
            f"{first} vs {second}",
            word_bound=word_bound,
        )
    logger.debug(f"[KERNEL] {len(ball.elements)} element(s), verdict {first}")
    return first, ball, picked


def translation_subgroup(generators: Sequence[PlaneIsometry], word_bound: Optional[int] = None,
                         discreteness_tol: Optional[float] = None) -> KernelVerdict:
    """
    Noyau de d : G -> S^1, extrait des mots de longueur <= word_bound.

    Args:
        generators: Générateurs du groupe
        word_bound: Longueur maximale des mots (Config.WORD_BOUND par défaut)
        discreteness_tol: Seuil absolu en dessous duquel une translation est nulle

    Returns:
        TranslationLattice (rang 0, 1 ou 2) ou DenseSubgroup

    Raises:
        InconclusiveBudget: Si le verdict change entre word_bound et word_bound + 2
    """
    verdict, _, _ = _stable_kernel(generators, word_bound or Config.WORD_BOUND, discreteness_tol)
    return verdict


def crystallographic_check(lam: complex, lattice: TranslationLattice, tol: float = 1e-9) -> np.ndarray:
    """
    Matrice entière [[r_a, r_b], [s_a, s_b]] de la multiplication par lam sur (alpha, a).

    Raises:
        NotCrystallographic: Sans solution entière de déterminant 1
    """
    if lattice.rank != 2:
        raise NotCrystallographic(f"Crystallographic check needs a rank-2 lattice, got rank {lattice.rank}")
    alpha, a = complex(lattice.alpha), lattice.a
    M = np.array([[alpha.real, a.real], [alpha.imag, a.imag]])
    images = np.array([[(lam * alpha).real, (lam * a).real], [(lam * alpha).imag, (lam * a).imag]])
    coeffs = np.linalg.solve(M, images)
    rounded = np.round(coeffs)
    if np.max(np.abs(coeffs - rounded)) > tol:
        raise NotCrystallographic(f"Rotation {lam} does not preserve the lattice (alpha={alpha.real}, a={a})")
    matrix = rounded.astype(int)
    if int(round(np.linalg.det(matrix))) != 1:
        raise NotCrystallographic(f"Lattice action of {lam} has determinant {np.linalg.det(matrix):.3g}")
    return matrix


# ============================================================================
# Classification
# ============================================================================

@dataclass
class IsometryGroupDescription:
    """
    Résultat de classification.

    ``parameters`` contient selon le cas : order, axis, alpha, a.
    """
    case: str
    conjugator: PlaneIsometry
    parameters: Dict[str, object] = field(default_factory=dict)
    family: Optional[str] = None
    evidence: List[str] = field(default_factory=list)
    confidence: str = "exact"
    lattice: Optional[TranslationLattice] = None

    @property
    def case_number(self) -> int:
        return CASE_NUMBERS[self.case]

    @property
    def label(self) -> str:
        if self.case == "Exceptional":
            return self.family
        return self.case


def _rotation_image(generators: Sequence[PlaneIsometry],
                    rotation_tol: Optional[float]) -> Tuple[Optional[int], str]:
    """Ordre de l'image de d (None si infinie) et niveau de confiance."""
    order = 1
    confidence = "exact"
    for g in generators:
        if g.is_exact:
            turns = g.turns
        else:
            confidence = "numerical"
            turns = rational_turns(g.lam, rotation_tol)
            if turns is None:
                return None, confidence
        order = lcm(order, turns.denominator)
    return order, confidence


def _rotation_witness(ball: WordBall, order: int, tol: float) -> Optional[int]:
    target = Fraction(1, order)
    lam = _exp_turns(target)
    for k, element in enumerate(ball.elements):
        if element.is_exact and element.turns == target:
            return k
        if not element.is_exact and abs(element.lam - lam) <= tol:
            return k
    return None


def _normalizer(direction: complex, center: complex) -> PlaneIsometry:
    """L(z) = conj(direction) (z - center)."""
    rot = complex(direction).conjugate()
    rot = rot / abs(rot)
    return PlaneIsometry(lam=rot, a=-rot * complex(center))


def _augmented(generators: Sequence[PlaneIsometry], verdict: KernelVerdict) -> List[PlaneIsometry]:
    """Générateurs complétés par les conjugués des translations de base par les rotations."""
    extra = []
    basis = verdict.basis if isinstance(verdict, TranslationLattice) else ()
    for g in generators:
        if g.is_translation():
            continue
        for v in basis:
            power = g.lam
            for _ in range(5):
                extra.append(PlaneIsometry.translation(power * v))
                power *= g.lam
    return list(generators) + extra


def classify(generators: Sequence[PlaneIsometry], word_bound: Optional[int] = None,
             discreteness_tol: Optional[float] = None,
             rotation_tol: Optional[float] = None) -> IsometryGroupDescription:
    """
    Classe le groupe engendré dans l'un des sept cas.

    Args:
        generators: Générateurs
        word_bound: Longueur de mots (Config.WORD_BOUND par défaut)
        discreteness_tol: Seuil de translation nulle (données bruitées)
        rotation_tol: Tolérance du test de rationalité des rotations

    Returns:
        IsometryGroupDescription

    Raises:
        InconclusiveBudget: Si l'énumération ne se stabilise pas ou reste incohérente
    """
    word_bound = word_bound or Config.WORD_BOUND
    order, confidence = _rotation_image(generators, rotation_tol)
    element_tol = max(UNIT_TOL, discreteness_tol or 0.0)

    gens = list(generators)
    for attempt in range(2):
        verdict, ball, picked = _stable_kernel(gens, word_bound, discreteness_tol)
        evidence = [ball.words[k] for k in picked[:4]]
        description = _describe(verdict, order, ball, gens, evidence, confidence, element_tol)
        if description is not None:
            logger.info(f"✅ [CLASSIFY] {description.label} (case {description.case_number}), "
                        f"confidence={confidence}")
            return description
        logger.warning(f"⚠️  [CLASSIFY] kernel {verdict} inconsistent with rotation image "
                       f"{order}, re-enumerating with conjugated translations")
        gens = _augmented(gens, verdict)
    raise InconclusiveBudget(
        f"Kernel {verdict} stays inconsistent with rotation image of order {order}", word_bound=word_bound
    )


def _describe(verdict: KernelVerdict, order: Optional[int], ball: WordBall,
              generators: Sequence[PlaneIsometry], evidence: List[str], confidence: str,
              tol: float) -> Optional[IsometryGroupDescription]:
    """Description du cas, ou None si noyau et image sont incompatibles."""
    if isinstance(verdict, DenseSubgroup):
        if verdict.kind == "line" and order in (1, 2):
            return IsometryGroupDescription(
                case="LineMinimal", conjugator=_normalizer(verdict.axis, 0j),
                parameters={"axis": verdict.axis}, evidence=evidence, confidence=confidence,
            )
        return IsometryGroupDescription(
            case="Minimal", conjugator=PlaneIsometry.identity(),
            parameters={"dense": verdict.kind}, evidence=evidence, confidence=confidence,
        )

    lattice = verdict
    rotations = [g for g in generators if not g.is_translation(tol)]
    if lattice.rank == 0:
        center = rotations[0].fixed_point() if rotations else 0j
        conjugator = PlaneIsometry.translation(-center)
        if rotations:
            evidence = evidence + [f"g{list(generators).index(rotations[0])}"]
        if order is None:
            return IsometryGroupDescription(case="RotationMinimal", conjugator=conjugator,
                                            parameters={"angle": float(np.angle(rotations[0].lam))},
                                            evidence=evidence, confidence=confidence)
        return IsometryGroupDescription(case="FiniteRotation", conjugator=conjugator,
                                        parameters={"order": order}, evidence=evidence, confidence=confidence)

    if order is None:
        return None
    if lattice.rank == 1 and order > 2:
        return None

    center = 0j
    if order > 1:
        witness = _rotation_witness(ball, order, tol)
        if witness is None:
            return None
        center = ball.elements[witness].fixed_point()
        evidence = evidence + [ball.words[witness]]
    conjugator = _normalizer(lattice.direction, center)

    if lattice.rank == 1:
        if order == 1:
            return IsometryGroupDescription(case="Z", conjugator=conjugator, parameters={"alpha": lattice.alpha},
                                            evidence=evidence, confidence=confidence, lattice=lattice)
        return IsometryGroupDescription(case="Exceptional", family="Zminus", conjugator=conjugator,
                                        parameters={"alpha": lattice.alpha}, evidence=evidence,
                                        confidence=confidence, lattice=lattice)

    if order not in (1, 2, 3, 4, 6):
        return None
    try:
        crystallographic_check(_exp_turns(Fraction(1, order)), lattice, tol=max(1e-9, tol))
    except NotCrystallographic:
        return None
    parameters = {"alpha": lattice.alpha, "a": lattice.a}
    if order == 1:
        return IsometryGroupDescription(case="Z2", conjugator=conjugator, parameters=parameters,
                                        evidence=evidence, confidence=confidence, lattice=lattice)
    if order == 2:
        return IsometryGroupDescription(case="Exceptional", family="Z2minus", conjugator=conjugator,
                                        parameters=parameters, evidence=evidence, confidence=confidence,
                                        lattice=lattice)
    return IsometryGroupDescription(case="Exceptional", family=_FAMILY_BY_ORDER[order], conjugator=conjugator,
                                    parameters={"alpha": lattice.alpha}, evidence=evidence,
                                    confidence=confidence, lattice=lattice)


def exceptional_constructors(family: str, alpha: float, a: Optional[complex] = None) -> List[PlaneIsometry]:
    """
    Générateurs canoniques d'une famille exceptionnelle.

    Raises:
        BadParameters: Famille inconnue, alpha <= 0 ou a hors du demi-plan supérieur
    """
    if family not in EXCEPTIONAL_FAMILIES:
        raise BadParameters(f"Unknown exceptional family {family!r}, expected one of {EXCEPTIONAL_FAMILIES}")
    if not alpha > 0:
        raise BadParameters(f"alpha must be positive, got {alpha}")
    turns = {"Lambda0": Fraction(1, 6), "Lambda1": Fraction(1, 3), "Z2i": Fraction(1, 4),
             "Zminus": Fraction(1, 2), "Z2minus": Fraction(1, 2)}[family]
    generators = [PlaneIsometry.rotation(turns), PlaneIsometry.translation(alpha)]
    if family == "Z2minus":
        if a is None or not complex(a).imag > 0:
            raise BadParameters(f"Z2minus needs a in the upper half-plane, got {a}")
        generators.append(PlaneIsometry.translation(a))
    return generators
