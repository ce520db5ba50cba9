"""Immutable expression trees over one integration variable and named parameters.

Every node is built through the smart constructors (``add``, ``mul``,
``power``, ``ln`` ...), which keep the tree canonical: sums and products are
flattened, like terms and like bases are merged, numbers are folded exactly,
and children are sorted by a fixed ordering.  Two expressions that are
canonically equal therefore compare equal with ``==``.

Exact scalars are :class:`fractions.Fraction` (aliased as ``Rational``).
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import reduce
from typing import Callable, Iterable, Mapping

import mpmath
import numpy as np

Rational = Fraction


class EvaluationError(ValueError):
    pass


class DomainError(EvaluationError):
    """Argument outside the real domain of a function (e.g. ln of a value <= 0)."""


class UnboundSymbolError(EvaluationError):
    pass


# rank fixes the canonical order between node kinds
_RANK = {
    "Number": 0,
    "Pi": 1,
    "Param": 2,
    "Var": 3,
    "Power": 4,
    "Product": 5,
    "Sum": 6,
    "Ln": 7,
    "Atan": 8,
    "Acot": 9,
    "Cos": 10,
    "Sin": 11,
}


class Expr:
    __slots__ = ("_key", "_hash")

    def _init_key(self, key: tuple) -> None:
        object.__setattr__(self, "_key", key)
        object.__setattr__(self, "_hash", hash(key))

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @property
    def args(self) -> tuple[Expr, ...]:
        return ()

    def rebuild(self, args: tuple[Expr, ...]) -> Expr:
        return self

    @property
    def key(self) -> tuple:
        return self._key

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr):
            return NotImplemented
        return self._hash == other._hash and self._key == other._key

    def __hash__(self):
        return self._hash

    def __lt__(self, other: Expr) -> bool:
        return self._key < other._key

    def __repr__(self):
        return f"{type(self).__name__}({str(self)!r})"

    def __str__(self):
        from .parse import render

        return render(self)

    # arithmetic sugar for building trees in code
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(other, neg(self))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return mul(self, power(as_expr(other), MINUS_ONE))

    def __rtruediv__(self, other):
        return mul(other, power(self, MINUS_ONE))

    def __pow__(self, other):
        return power(self, other)

    def __rpow__(self, other):
        return power(other, self)

    def __neg__(self):
        return neg(self)


class Number(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        value = Fraction(value)
        object.__setattr__(self, "value", value)
        self._init_key((0, value))


class Pi(Expr):
    __slots__ = ()

    def __init__(self):
        self._init_key((1,))


class Symbol(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        object.__setattr__(self, "name", name)
        self._init_key((_RANK[type(self).__name__], name))


class Param(Symbol):
    __slots__ = ()


class Var(Symbol):
    __slots__ = ()


class Sum(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: tuple[Expr, ...]):
        object.__setattr__(self, "terms", tuple(terms))
        self._init_key((6, tuple(t._key for t in self.terms)))

    @property
    def args(self):
        return self.terms

    def rebuild(self, args):
        return add(*args)


class Product(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: tuple[Expr, ...]):
        object.__setattr__(self, "factors", tuple(factors))
        self._init_key((5, tuple(f._key for f in self.factors)))

    @property
    def args(self):
        return self.factors

    def rebuild(self, args):
        return mul(*args)


class Power(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp: Expr):
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exp", exp)
        self._init_key((4, base._key, exp._key))

    @property
    def args(self):
        return (self.base, self.exp)

    def rebuild(self, args):
        return power(*args)


class Function(Expr):
    """One-argument elementary function node."""

    __slots__ = ("arg",)
    name = ""

    def __init__(self, arg: Expr):
        object.__setattr__(self, "arg", arg)
        self._init_key((_RANK[type(self).__name__], arg._key))

    @property
    def args(self):
        return (self.arg,)

    def rebuild(self, args):
        return FUNCTIONS[self.name](args[0])


class Ln(Function):
    __slots__ = ()
    name = "ln"


class Atan(Function):
    __slots__ = ()
    name = "atan"


class Acot(Function):
    __slots__ = ()
    name = "acot"


class Cos(Function):
    __slots__ = ()
    name = "cos"


class Sin(Function):
    __slots__ = ()
    name = "sin"


ZERO = Number(0)
ONE = Number(1)
MINUS_ONE = Number(-1)
HALF = Number(Fraction(1, 2))
PI = Pi()


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction)):
        return Number(value)
    if isinstance(value, float):
        return Number(Fraction(value).limit_denominator(10**12))
    raise TypeError(f"cannot convert {value!r} to an expression")


def _flatten(args, cls) -> list[Expr]:
    out = []
    for a in args:
        a = as_expr(a)
        if isinstance(a, cls):
            out.extend(a.args)
        else:
            out.append(a)
    return out


def split_coeff(e: Expr) -> tuple[Fraction, Expr]:
    """Split ``e`` into its numeric coefficient and the remaining factor."""
    if isinstance(e, Number):
        return e.value, ONE
    if isinstance(e, Product) and isinstance(e.factors[0], Number):
        rest = e.factors[1:]
        return e.factors[0].value, rest[0] if len(rest) == 1 else Product(rest)
    return Fraction(1), e


def _scale(c: Fraction, rest: Expr) -> Expr:
    if c == 1:
        return rest
    if rest == ONE:
        return Number(c)
    if isinstance(rest, Product):
        return Product((Number(c),) + rest.factors)
    return Product((Number(c), rest))


def add(*args) -> Expr:
    const = Fraction(0)
    coeffs: dict[Expr, Fraction] = {}
    for a in _flatten(args, Sum):
        if isinstance(a, Number):
            const += a.value
            continue
        c, rest = split_coeff(a)
        coeffs[rest] = coeffs.get(rest, 0) + c
    terms = [Number(const)] if const else []
    terms += [_scale(c, rest) for rest, c in coeffs.items() if c]
    if not terms:
        return ZERO
    if len(terms) == 1:
        return terms[0]
    return Sum(tuple(sorted(terms, key=lambda t: t._key)))


def mul(*args) -> Expr:
    coeff = Fraction(1)
    exps: dict[Expr, Expr] = {}
    for a in _flatten(args, Product):
        if isinstance(a, Number):
            coeff *= a.value
            continue
        base, e = (a.base, a.exp) if isinstance(a, Power) else (a, ONE)
        exps[base] = add(exps[base], e) if base in exps else e
    if coeff == 0:
        return ZERO
    factors: list[Expr] = []
    redo = False
    for base, e in exps.items():
        p = power(base, e)
        if isinstance(p, Number):
            coeff *= p.value
        elif isinstance(p, Product):
            factors.extend(p.factors)
            redo = True
        else:
            factors.append(p)
    if redo:
        return mul(Number(coeff), *factors)
    if coeff == 0:
        return ZERO
    if not factors:
        return Number(coeff)
    factors.sort(key=lambda f: f._key)
    if coeff != 1:
        factors.insert(0, Number(coeff))
    if len(factors) == 1:
        return factors[0]
    return Product(tuple(factors))


def _int_root(n: int, q: int) -> int | None:
    if n < 0:
        return None
    r = int(round(n ** (1.0 / q))) if n < 2**1000 else None
    if r is None:
        return None
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand**q == n:
            return cand
    return None


def _rational_power(b: Fraction, e: Fraction) -> Expr | None:
    if e.denominator == 1:
        if b == 0 and e < 0:
            raise DomainError("zero raised to a negative power")
        return Number(b ** int(e))
    if b <= 0:
        return None
    num = _int_root(b.numerator, e.denominator)
    den = _int_root(b.denominator, e.denominator)
    if num is None or den is None:
        return None
    return Number(Fraction(num, den) ** e.numerator)


def power(base, exp) -> Expr:
    base, exp = as_expr(base), as_expr(exp)
    if exp == ZERO:
        return ONE
    if exp == ONE:
        return base
    if isinstance(base, Number):
        if base.value == 1:
            return ONE
        if isinstance(exp, Number):
            folded = _rational_power(base.value, exp.value)
            if folded is not None:
                return folded
    if isinstance(exp, Number) and exp.value.denominator == 1:
        # integer outer exponents are always safe to push inward
        if isinstance(base, Power):
            return power(base.base, mul(base.exp, exp))
        if isinstance(base, Product):
            return mul(*(power(f, exp) for f in base.factors))
    return Power(base, exp)


def neg(e) -> Expr:
    return mul(MINUS_ONE, e)


def sub(a, b) -> Expr:
    return add(a, neg(as_expr(b)))


def div(a, b) -> Expr:
    return mul(a, power(as_expr(b), MINUS_ONE))


def ln(u) -> Expr:
    u = as_expr(u)
    if u == ONE:
        return ZERO
    if isinstance(u, Number) and u.value <= 0:
        raise DomainError(f"ln of non-positive constant {u.value}")
    return Ln(u)


def atan(u) -> Expr:
    u = as_expr(u)
    return ZERO if u == ZERO else Atan(u)


def acot(u) -> Expr:
    return Acot(as_expr(u))


def cos(u) -> Expr:
    u = as_expr(u)
    return ONE if u == ZERO else Cos(u)


def sin(u) -> Expr:
    u = as_expr(u)
    return ZERO if u == ZERO else Sin(u)


FUNCTIONS: dict[str, Callable[[Expr], Expr]] = {
    "ln": ln,
    "atan": atan,
    "acot": acot,
    "cos": cos,
    "sin": sin,
}


def var(name: str) -> Var:
    return Var(name)


def param(name: str) -> Param:
    return Param(name)


# ---------------------------------------------------------------- queries


def walk(e: Expr) -> Iterable[Expr]:
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(node.args)


def variables(e: Expr) -> set[str]:
    return {n.name for n in walk(e) if isinstance(n, Var)}


def parameters(e: Expr) -> set[str]:
    return {n.name for n in walk(e) if isinstance(n, Param)}


def free_symbols(e: Expr) -> set[str]:
    return {n.name for n in walk(e) if isinstance(n, Symbol)}


def has_symbol(e: Expr, name: str) -> bool:
    return any(isinstance(n, Symbol) and n.name == name for n in walk(e))


def single_variable(e: Expr) -> str | None:
    vs = variables(e)
    if len(vs) > 1:
        raise ValueError(f"expression has more than one integration variable: {sorted(vs)}")
    return next(iter(vs), None)


# ---------------------------------------------------------------- rewriting helpers


def map_bottom_up(e: Expr, fn: Callable[[Expr], Expr | None]) -> Expr:
    """Rebuild ``e`` children-first; ``fn`` may replace each rebuilt node."""
    memo: dict[Expr, Expr] = {}

    def go(node: Expr) -> Expr:
        hit = memo.get(node)
        if hit is not None:
            return hit
        args = node.args
        out = node
        if args:
            new = tuple(go(a) for a in args)
            if any(n is not o for n, o in zip(new, args)):
                out = node.rebuild(new)
        repl = fn(out)
        if repl is not None:
            out = repl
        memo[node] = out
        return out

    return go(e)


def substitute(e: Expr, name: str, replacement) -> Expr:
    """Replace every occurrence of the symbol ``name`` and re-canonicalize."""
    replacement = as_expr(replacement)
    memo: dict[Expr, Expr] = {}

    # Replace original occurrences only: a rebuilt node that collapses back
    # to the symbol (as (1/x)^-1 does) must not be substituted again.
    def go(node: Expr) -> Expr:
        hit = memo.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Symbol):
            out = replacement if node.name == name else node
        elif node.args:
            new = tuple(go(arg) for arg in node.args)
            out = node if all(n is o for n, o in zip(new, node.args)) else node.rebuild(new)
        else:
            out = node
        memo[node] = out
        return out

    return go(e)


def is_positive(e: Expr, positive: frozenset[str] | set[str] = frozenset()) -> bool:
    """Conservative proof that ``e > 0`` wherever it is defined."""
    if isinstance(e, Number):
        return e.value > 0
    if isinstance(e, Pi):
        return True
    if isinstance(e, Symbol):
        return e.name in positive
    if isinstance(e, Sum):
        return all(is_nonneg(t, positive) for t in e.terms) and any(
            is_positive(t, positive) for t in e.terms
        )
    if isinstance(e, Product):
        return all(is_positive(f, positive) for f in e.factors)
    if isinstance(e, Power):
        return is_positive(e.base, positive)
    if isinstance(e, Acot):
        return True
    if isinstance(e, Atan):
        return is_positive(e.arg, positive)
    return False


def is_even_integer(e: Expr) -> bool:
    return isinstance(e, Number) and e.value.denominator == 1 and e.value.numerator % 2 == 0


def is_nonneg(e: Expr, positive: frozenset[str] | set[str] = frozenset()) -> bool:
    if is_positive(e, positive):
        return True
    if isinstance(e, Number):
        return e.value >= 0
    if isinstance(e, Sum):
        return all(is_nonneg(t, positive) for t in e.terms)
    if isinstance(e, Product):
        return all(is_nonneg(f, positive) for f in e.factors)
    if isinstance(e, Power):
        return is_even_integer(e.exp) or is_nonneg(e.base, positive)
    if isinstance(e, Atan):
        return is_nonneg(e.arg, positive)
    return False


def linear_form(e: Expr) -> dict[str, Fraction] | None:
    """Exponent as ``{param: coeff, "": const}`` if it is linear in parameters."""
    if isinstance(e, Number):
        return {"": e.value}
    if isinstance(e, Param):
        return {e.name: Fraction(1)}
    if isinstance(e, Product):
        c, rest = split_coeff(e)
        if isinstance(rest, Param):
            return {rest.name: c}
        if isinstance(rest, Sum):
            inner = linear_form(rest)
            return None if inner is None else {k: c * v for k, v in inner.items()}
        return None
    if isinstance(e, Sum):
        out: dict[str, Fraction] = {}
        for t in e.terms:
            part = linear_form(t)
            if part is None:
                return None
            for k, v in part.items():
                out[k] = out.get(k, 0) + v
        return out
    return None


def _monomial(term: Expr, x: str) -> tuple[Expr, Expr] | None:
    """``term`` as (x-free coefficient, exponent of x), or None."""
    if not has_symbol(term, x):
        return term, ZERO
    if isinstance(term, Var) and term.name == x:
        return ONE, ONE
    if isinstance(term, Power) and isinstance(term.base, Var) and term.base.name == x:
        return (ONE, term.exp) if not has_symbol(term.exp, x) else None
    if isinstance(term, Product):
        inside = [f for f in term.factors if has_symbol(f, x)]
        if len(inside) != 1:
            return None
        mono = _monomial(inside[0], x)
        if mono is None or mono[0] != ONE:
            return None
        rest = [f for f in term.factors if f is not inside[0]]
        return mul(*rest), mono[1]
    return None


def monomial_factor(s: Expr, x: str | None) -> Expr | None:
    """Factor ``x**e_min`` (and a sign) out of a sum of monomials in ``x``.

    ``1 + x**(-2*a)`` becomes ``x**(-2*a) * (1 + x**(2*a))``; the remaining sum
    has a zero-exponent term with a positive numeric coefficient.  This is the
    normal form that makes ``P(1/x)`` and ``reversed(P)(x)`` meet.
    """
    if x is None or not isinstance(s, Sum):
        return None
    monos = []
    for t in s.terms:
        m = _monomial(t, x)
        if m is None:
            return None
        monos.append(m)
    forms = [linear_form(e) for _, e in monos]
    if any(f is None for f in forms):
        return None
    names = sorted({k for f in forms for k in f if k != ""})
    keys = [tuple(f.get(k, Fraction(0)) for k in names) + (f.get("", Fraction(0)),) for f in forms]
    zero_key = (Fraction(0),) * (len(names) + 1)
    if all(k == zero_key for k in keys):
        return None
    kmin = min(keys)
    lead = min(
        (monos[i] for i, k in enumerate(keys) if k == kmin), key=lambda m: m[0]._key
    )
    sign = -1 if split_coeff(lead[0])[0] < 0 else 1
    if kmin == zero_key and sign == 1:
        return None
    e_min = monos[keys.index(kmin)][1]
    xv = Var(x)
    inner = add(*(mul(sign, c, power(xv, sub(e, e_min))) for c, e in monos))
    return mul(sign, power(xv, e_min), inner)


def power_of_power(e: Expr, positive=frozenset()) -> Expr | None:
    """``(u**p)**q -> u**(p*q)`` when no sign information is lost."""
    if not (isinstance(e, Power) and isinstance(e.base, Power)):
        return None
    inner = e.base
    if is_even_integer(inner.exp) and not is_nonneg(inner.base, positive):
        return None
    return power(inner.base, mul(inner.exp, e.exp))


def simplify_basic(e: Expr, var: str | None = None, positive=frozenset(), max_passes: int = 64) -> Expr:
    """Canonicalize, merge nested powers and normalize monomial sums.

    The result evaluates to the same value as ``e`` at every point where
    ``e`` is defined.
    """
    x = var if var is not None else single_variable(e)

    def fn(node):
        out = power_of_power(node, positive)
        if out is None:
            out = monomial_factor(node, x)
        return out

    for _ in range(max_passes):
        new = map_bottom_up(e, fn)
        if new == e:
            return new
        e = new
    return e


# ---------------------------------------------------------------- differentiation


def differentiate(e: Expr, name: str) -> Expr:
    """Symbolic derivative of ``e`` with respect to the symbol ``name``."""
    if not has_symbol(e, name):
        return ZERO
    if isinstance(e, Symbol):
        return ONE
    if isinstance(e, Sum):
        return add(*(differentiate(t, name) for t in e.terms))
    if isinstance(e, Product):
        fs = e.factors
        return add(
            *(
                mul(*fs[:i], differentiate(f, name), *fs[i + 1 :])
                for i, f in enumerate(fs)
                if has_symbol(f, name)
            )
        )
    if isinstance(e, Power):
        b, p = e.base, e.exp
        db = differentiate(b, name)
        if not has_symbol(p, name):
            return mul(p, power(b, sub(p, ONE)), db)
        dp = differentiate(p, name)
        return mul(e, add(mul(dp, ln(b)), mul(p, db, power(b, MINUS_ONE))))
    if isinstance(e, Function):
        u = e.arg
        du = differentiate(u, name)
        if isinstance(e, Ln):
            return mul(du, power(u, MINUS_ONE))
        if isinstance(e, Atan):
            return mul(du, power(add(ONE, power(u, 2)), MINUS_ONE))
        if isinstance(e, Acot):
            return mul(MINUS_ONE, du, power(add(ONE, power(u, 2)), MINUS_ONE))
        if isinstance(e, Cos):
            return mul(MINUS_ONE, sin(u), du)
        if isinstance(e, Sin):
            return mul(cos(u), du)
    raise TypeError(f"cannot differentiate {type(e).__name__}")


# ---------------------------------------------------------------- evaluation

Bindings = Mapping[str, float]


def _domain_fail(msg: str, mask) -> None:
    if np.any(mask):
        raise DomainError(msg)


def _ev_np(e: Expr, env: Mapping[str, object]):
    if isinstance(e, Number):
        try:
            return float(e.value)
        except OverflowError:
            return math.inf if e.value > 0 else -math.inf
    if isinstance(e, Pi):
        return math.pi
    if isinstance(e, Symbol):
        try:
            return env[e.name]
        except KeyError:
            raise UnboundSymbolError(f"unbound symbol {e.name!r}") from None
    if isinstance(e, Sum):
        return reduce(np.add, (_ev_np(t, env) for t in e.terms))
    if isinstance(e, Product):
        return reduce(np.multiply, (_ev_np(f, env) for f in e.factors))
    if isinstance(e, Power):
        b = np.asarray(_ev_np(e.base, env), dtype=float)
        if isinstance(e.exp, Number) and e.exp.value.denominator == 1:
            k = int(e.exp.value)
            if k < 0:
                _domain_fail("division by zero", b == 0)
            return np.power(b, float(k)) if abs(k) > 2**52 else b ** k
        p = np.asarray(_ev_np(e.exp, env), dtype=float)
        _domain_fail("non-integer power of a negative base", b < 0)
        _domain_fail("zero raised to a non-positive power", (b == 0) & (p <= 0))
        return np.power(b, p)
    if isinstance(e, Function):
        u = np.asarray(_ev_np(e.arg, env), dtype=float)
        if isinstance(e, Ln):
            _domain_fail("ln of a non-positive value", u <= 0)
            return np.log(u)
        if isinstance(e, Atan):
            return np.arctan(u)
        if isinstance(e, Acot):
            return math.pi / 2 - np.arctan(u)
        if isinstance(e, Cos):
            return np.cos(u)
        if isinstance(e, Sin):
            return np.sin(u)
    raise TypeError(f"cannot evaluate {type(e).__name__}")


def _ev_mp(e: Expr, env: Mapping[str, object]):
    if isinstance(e, Number):
        return mpmath.mpf(e.value.numerator) / e.value.denominator
    if isinstance(e, Pi):
        return +mpmath.pi
    if isinstance(e, Symbol):
        try:
            return mpmath.mpf(env[e.name])
        except KeyError:
            raise UnboundSymbolError(f"unbound symbol {e.name!r}") from None
    if isinstance(e, Sum):
        return mpmath.fsum(_ev_mp(t, env) for t in e.terms)
    if isinstance(e, Product):
        return reduce(lambda a, b: a * b, (_ev_mp(f, env) for f in e.factors))
    if isinstance(e, Power):
        b = _ev_mp(e.base, env)
        if isinstance(e.exp, Number) and e.exp.value.denominator == 1:
            if b == 0 and e.exp.value < 0:
                raise DomainError("division by zero")
            return b ** int(e.exp.value)
        p = _ev_mp(e.exp, env)
        if b < 0:
            raise DomainError("non-integer power of a negative base")
        if b == 0:
            if p <= 0:
                raise DomainError("zero raised to a non-positive power")
            return mpmath.mpf(0)
        return mpmath.power(b, p)
    if isinstance(e, Function):
        u = _ev_mp(e.arg, env)
        if isinstance(e, Ln):
            if u <= 0:
                raise DomainError("ln of a non-positive value")
            return mpmath.log(u)
        if isinstance(e, Atan):
            return mpmath.atan(u)
        if isinstance(e, Acot):
            return mpmath.pi / 2 - mpmath.atan(u)
        if isinstance(e, Cos):
            return mpmath.cos(u)
        if isinstance(e, Sin):
            return mpmath.sin(u)
    raise TypeError(f"cannot evaluate {type(e).__name__}")


def _env(e: Expr, var_value, params: Bindings | None, var: str | None) -> dict:
    env = dict(params or {})
    name = var if var is not None else single_variable(e)
    if name is not None:
        env[name] = var_value
    return env


def evaluate(e: Expr, var_value=None, params: Bindings | None = None, var: str | None = None):
    """Evaluate in binary64.  ``var_value`` may be a scalar or a numpy array.

    Symbolic powers ``u**p`` require ``u > 0``; integer powers accept any sign.
    Overflow is not an error here: callers see ``inf``/``nan`` and may retry
    with :func:`evaluate_mp`.
    """
    env = _env(e, var_value, params, var)
    with np.errstate(all="ignore"):
        out = _ev_np(e, env)
    if np.ndim(var_value) == 0:
        return float(out)
    return np.broadcast_to(np.asarray(out, dtype=float), np.shape(var_value)).copy()


def evaluate_mp(e: Expr, var_value=None, params: Bindings | None = None, var: str | None = None, dps: int = 30):
    """Scalar evaluation in mpmath (unbounded exponent range)."""
    env = _env(e, var_value, params, var)
    with mpmath.workdps(dps):
        return _ev_mp(e, env)


def magnitude(e: Expr, var_value=None, params: Bindings | None = None, var: str | None = None):
    """Sum of absolute term sizes: the scale against which cancellation is judged."""
    env = _env(e, var_value, params, var)

    def go(node):
        if isinstance(node, Sum):
            return reduce(np.add, (go(t) for t in node.terms))
        if isinstance(node, Product):
            return reduce(np.multiply, (go(f) for f in node.factors))
        return np.abs(_ev_np(node, env))

    with np.errstate(all="ignore"):
        out = go(e)
    if np.ndim(var_value) == 0:
        return float(out)
    return np.broadcast_to(np.asarray(out, dtype=float), np.shape(var_value)).copy()
