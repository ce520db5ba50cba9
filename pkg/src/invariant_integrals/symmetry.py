"""Palindromic polynomials and the reciprocal fold x -> 1/x.

The fold maps the tail (1, inf) of an integral onto (0, 1)::

    int_0^inf f(x) dx = int_0^1 [f(x) + f(1/x) / x^2] dx

so an integrand is decided by its *fold residue*, the bracket above: if it
rewrites to 0 the integral vanishes, and if it rewrites to a constant times
a weight with a known integral over (0, 1), the value follows.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .expr import (
    MINUS_ONE,
    ONE,
    PI,
    ZERO,
    DomainError,
    Expr,
    Number,
    Var,
    add,
    evaluate,
    has_symbol,
    magnitude,
    mul,
    parameters,
    power,
    substitute,
)
from .rewrite import Context, rewrite


@dataclass(frozen=True)
class PolyCoeffs:
    """Exact coefficients ``c[k]`` of ``sum c[k] x**k``; trailing zeros dropped."""

    coeffs: tuple[Fraction, ...]

    def __init__(self, coeffs: Iterable):
        cs = [Fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def reversed(self) -> PolyCoeffs:
        return PolyCoeffs(self.coeffs[::-1])

    def __neg__(self) -> PolyCoeffs:
        return PolyCoeffs(-c for c in self.coeffs)

    def __len__(self):
        return len(self.coeffs)

    def to_expr(self, var: str = "x") -> Expr:
        x = Var(var)
        return add(*(mul(c, power(x, k)) for k, c in enumerate(self.coeffs)))


def _poly(p) -> PolyCoeffs:
    return p if isinstance(p, PolyCoeffs) else PolyCoeffs(p)


def is_palindromic(p) -> bool:
    cs = _poly(p).coeffs
    return cs == cs[::-1]


def is_antipalindromic(p) -> bool:
    cs = _poly(p).coeffs
    return all(a == -b for a, b in zip(cs, cs[::-1]))


def weight_table(var: str = "x") -> tuple[tuple[Expr, Expr], ...]:
    """Self-dual weights w with their exact integrals over (0, 1)."""
    x = Var(var)
    return (
        (power(add(ONE, power(x, 2)), MINUS_ONE), mul(Fraction(1, 4), PI)),
        (power(add(ONE, x), -2), Number(Fraction(1, 2))),
    )


def fold_context(var: str, positive: Iterable[str] = ()) -> Context:
    return Context(var, frozenset({var, *positive}))


def fold_image_raw(f: Expr, var: str) -> Expr:
    x = Var(var)
    return mul(substitute(f, var, power(x, MINUS_ONE)), power(x, -2))


def fold_image(f: Expr, var: str = "x", positive: Iterable[str] = ()) -> Expr:
    """``f(1/x) / x**2``, rewritten; integrates over (0, 1) to the tail of ``f``."""
    return rewrite(fold_image_raw(f, var), fold_context(var, positive))


def fold_residue(f: Expr, var: str = "x", positive: Iterable[str] = ()) -> Expr:
    """``f(x) + f(1/x) / x**2``, rewritten with the identity table."""
    return rewrite(add(f, fold_image_raw(f, var)), fold_context(var, positive))


class Duality(enum.Enum):
    SELF_DUAL = "SelfDual"
    ANTI_DUAL = "AntiDual"
    CONSTANT_RESIDUE = "ConstantResidue"
    NEITHER = "Neither"


@dataclass(frozen=True)
class DualityClass:
    tag: Duality
    constant: Expr | None = None  # ConstantResidue: residue == constant * weight
    weight: Expr | None = None

    @property
    def residue(self) -> Expr | None:
        if self.tag is not Duality.CONSTANT_RESIDUE:
            return None
        return mul(self.constant, self.weight)


PROBE_POINTS = np.logspace(-2, 2, 20)
PROBE_RTOL = 1e-9


def default_bindings(names: Iterable[str]) -> dict[str, float]:
    # generic, positive, pairwise distinct values
    return {n: 0.61 + 0.37 * i for i, n in enumerate(sorted(names))}


def _numeric_image(f: Expr, var: str, params: Mapping[str, float]):
    x = PROBE_POINTS
    fx = evaluate(f, x, params, var)
    fy = evaluate(f, 1 / x, params, var) / x**2
    scale = magnitude(f, x, params, var) + magnitude(f, 1 / x, params, var) / x**2
    return fx, fy, scale


def classify_duality(
    f: Expr,
    var: str = "x",
    params: Mapping[str, float] | None = None,
    positive: Iterable[str] = (),
) -> DualityClass:
    """Classify ``f`` under the reciprocal fold.

    Checked in order: AntiDual (residue rewrites to 0), SelfDual (image
    rewrites to ``f``), ConstantResidue (residue rewrites to ``c * w`` for a
    table weight ``w`` and variable-free ``c``), else Neither.  A numeric
    probe at 20 log-spaced points rules candidates out before any rewriting.
    """
    if params is None:
        params = default_bindings(parameters(f))
    try:
        fx, fy, scale = _numeric_image(f, var, params)
        finite = np.isfinite(fx) & np.isfinite(fy)
        tol = PROBE_RTOL * np.where(scale > 0, scale, 1.0)
        maybe_anti = bool(np.all(np.abs(fx + fy)[finite] <= tol[finite]))
        maybe_self = bool(np.all(np.abs(fx - fy)[finite] <= tol[finite]))
        ratio_ok = {}
        for w, _ in weight_table(var):
            wx = evaluate(w, PROBE_POINTS, params, var)
            r = (fx + fy) / wx
            ratio_ok[w] = bool(np.all(np.abs(r - r[0])[finite] <= PROBE_RTOL * (np.abs(r[0]) + 1)))
    except DomainError:
        maybe_anti = maybe_self = True
        ratio_ok = {w: True for w, _ in weight_table(var)}

    ctx = fold_context(var, positive)
    if maybe_anti:
        if fold_residue(f, var, positive) == ZERO:
            return DualityClass(Duality.ANTI_DUAL)
    if maybe_self:
        if fold_image(f, var, positive) == rewrite(f, ctx):
            return DualityClass(Duality.SELF_DUAL)
    residue = None
    for w, _ in weight_table(var):
        if not ratio_ok[w]:
            continue
        if residue is None:
            residue = fold_residue(f, var, positive)
        c = rewrite(mul(residue, power(w, MINUS_ONE)), ctx)
        if not has_symbol(c, var):
            return DualityClass(Duality.CONSTANT_RESIDUE, constant=c, weight=w)
    return DualityClass(Duality.NEITHER)
