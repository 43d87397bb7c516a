"""
Évaluateur de densités conformes données par une formule.

Les formules portent sur la variable complexe ``z`` (ainsi que ``x``, ``y``)
avec ``|z|``, ``abs``, ``Re``, ``Im``, ``exp``, ``log``, ``sqrt``, ``pi`` et
l'arithmétique usuelle, par exemple ``2/(1-|z|**2)``.
"""
import re
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from .errors import JobConfigError


_X, _Y = sp.symbols("x y", real=True)

_ALLOWED_NAMES = {
    "z": _X + sp.I * _Y,
    "x": _X,
    "y": _Y,
    "Re": sp.re,
    "Im": sp.im,
    "abs": sp.Abs,
    "exp": sp.exp,
    "log": sp.log,
    "sqrt": sp.sqrt,
    "pi": sp.pi,
}

_ALLOWED_CHARS = re.compile(r"^[\sA-Za-z0-9_.+\-*/^()|,]*$")
_MODULUS = re.compile(r"\|([^|]+)\|")


@dataclass(frozen=True)
class CompiledDensity:
    """Densité compilée : rho(z) et gradient exact de log rho."""
    formula: str
    rho: Callable[[np.ndarray], np.ndarray]
    grad_log: Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]


def _vectorize(fn: Callable, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    value = np.asarray(fn(z.real, z.imag), dtype=float)
    return value + np.zeros(z.shape)


def compile_density(formula: str) -> CompiledDensity:
    """
    Compile une formule de densité.

    Args:
        formula: Expression de rho en fonction de z

    Returns:
        CompiledDensity avec évaluateurs vectorisés numpy

    Raises:
        JobConfigError: Si la formule contient des symboles non autorisés
            ou si sa partie imaginaire n'est pas identiquement nulle
    """
    if "__" in formula or not _ALLOWED_CHARS.match(formula):
        raise JobConfigError(f"Formula contains forbidden characters: {formula!r}")

    source = _MODULUS.sub(r"abs(\1)", formula).replace("^", "**")
    try:
        expr = parse_expr(
            source,
            local_dict=dict(_ALLOWED_NAMES),
            global_dict={"Integer": sp.Integer, "Float": sp.Float, "Rational": sp.Rational, "Symbol": sp.Symbol},
            transformations=standard_transformations,
        )
    except Exception as e:
        raise JobConfigError(f"Cannot parse formula {formula!r}: {e}")

    if expr.has(sp.I):
        imaginary = sp.simplify(sp.im(expr))
        if imaginary.is_zero is not True:
            raise JobConfigError(f"Formula {formula!r} is not real-valued: Im = {imaginary}")
        expr = sp.simplify(sp.re(expr))
    unknown = expr.free_symbols - {_X, _Y}
    if unknown:
        raise JobConfigError(f"Unknown symbols in formula {formula!r}: {sorted(map(str, unknown))}")

    log_expr = sp.log(expr)
    rho_fn = sp.lambdify((_X, _Y), expr, modules="numpy")
    dx_fn = sp.lambdify((_X, _Y), sp.diff(log_expr, _X), modules="numpy")
    dy_fn = sp.lambdify((_X, _Y), sp.diff(log_expr, _Y), modules="numpy")

    def rho(z: np.ndarray) -> np.ndarray:
        return _vectorize(rho_fn, z)

    def grad_log(z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return _vectorize(dx_fn, z), _vectorize(dy_fn, z)

    return CompiledDensity(formula=formula, rho=rho, grad_log=grad_log)
