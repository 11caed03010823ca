"""Named metric presets and the textual coefficient-table format."""

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import (
    convert_xor,
    implicit_multiplication_application,
    parse_expr,
    standard_transformations,
)

from app.core.errors import ConfigError
from app.metric.family import DEFAULT_U_VALIDITY, MAX_DEGREE, MetricFamily, flat, general, isotropic

_U = sp.Symbol("u")
_TRANSFORMS = standard_transformations + (implicit_multiplication_application, convert_xor)


def parse_speed_polynomial(text: str) -> list[float]:
    """Ascending coefficients of c(u) from text such as ``1+u+0.5u^2``"""
    try:
        expr = parse_expr(text, local_dict={"u": _U}, transformations=_TRANSFORMS)
        poly = sp.Poly(sp.expand(expr), _U)
    except (sp.SympifyError, sp.PolynomialError, SyntaxError, TypeError) as e:
        raise ConfigError(f"cannot parse wave speed {text!r}: {e}") from e
    if poly.free_symbols - {_U}:
        raise ConfigError(f"wave speed {text!r} may only depend on u")
    coeffs = [float(c) for c in reversed(poly.all_coeffs())]
    if 2 * (len(coeffs) - 1) > MAX_DEGREE:
        raise ConfigError(f"c(u)^2 of {text!r} exceeds degree {MAX_DEGREE}")
    return coeffs


def parse_matrix(text: str) -> np.ndarray:
    """4x4 matrix written as ``a b c d; e f g h; ...``"""
    rows = [r.split() for r in text.strip().split(";") if r.strip()]
    try:
        matrix = np.array([[float(x) for x in row] for row in rows])
    except ValueError as e:
        raise ConfigError(f"bad matrix entry in {text!r}") from e
    if matrix.shape != (4, 4):
        raise ConfigError(f"matrix {text!r} must be 4x4, got {matrix.shape}")
    return matrix


def format_matrix(matrix: np.ndarray) -> str:
    """Inverse of parse_matrix"""
    return "; ".join(" ".join(f"{x:.17g}" for x in row) for row in matrix)


def from_preset(
    preset: str,
    tables: dict[str, str] | None = None,
    u_validity: float = DEFAULT_U_VALIDITY,
) -> MetricFamily:
    """Build a family from ``flat``, ``isotropic:c=<poly>`` or ``general``.

    For ``general`` the coefficient matrices come from ``tables`` keys
    ``g1`` .. ``g4``; missing keys are zero.
    """
    preset = preset.strip()
    if preset == "flat":
        return flat()
    if preset.startswith("isotropic:"):
        spec = preset.split(":", 1)[1].strip()
        if not spec.startswith("c="):
            raise ConfigError(f"isotropic preset must read 'isotropic:c=...', got {preset!r}")
        return isotropic(parse_speed_polynomial(spec[2:]), u_validity=u_validity, name=preset)
    if preset == "general":
        tables = tables or {}
        unknown = set(tables) - {f"g{k}" for k in range(1, MAX_DEGREE + 1)}
        if unknown:
            raise ConfigError(f"unknown metric coefficient keys: {sorted(unknown)}")
        degree = max((int(k[1:]) for k in tables), default=0)
        coeffs = [
            parse_matrix(tables[f"g{k}"]) if f"g{k}" in tables else np.zeros((4, 4))
            for k in range(1, degree + 1)
        ]
        return general(coeffs, u_validity=u_validity, name=preset)
    raise ConfigError(f"unknown metric preset {preset!r}")
