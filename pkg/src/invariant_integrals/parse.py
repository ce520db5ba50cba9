"""Text grammar for expressions: recursive-descent parser and printer.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := ['-'] base ('^' factor)?
    base   := number | 'pi' | identifier | func '(' expr ')' | '(' expr ')'
    func   := 'ln' | 'atan' | 'acot' | 'cos' | 'sin'

``^`` binds tighter than unary minus and is right-associative, so ``-x^2``
is ``-(x^2)`` and ``2^3^2`` is ``2^(3^2)``.  Rationals such as ``3/7`` are
read through ``term`` and folded to a single exact number.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .expr import (
    FUNCTIONS,
    MINUS_ONE,
    PI,
    Expr,
    Function,
    Number,
    Param,
    Pi,
    Power,
    Product,
    Sum,
    Symbol,
    Var,
    add,
    mul,
    neg,
    power,
    split_coeff,
)

GRAMMAR = """\
expr   := term (('+'|'-') term)*
term   := factor (('*'|'/') factor)*
factor := ['-'] base ('^' factor)?
base   := number | 'pi' | identifier | func '(' expr ')' | '(' expr ')'
func   := 'ln' | 'atan' | 'acot' | 'cos' | 'sin'
number := integer | integer '/' integer | decimal
'^' binds tighter than unary minus and is right-associative."""

DEFAULT_VARIABLES = ("x", "phi")


class ParseError(SyntaxError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.message = message
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "ident", "op", "end"
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<num>\d+\.\d*|\.\d+|\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()])"
)


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind != "ws":
            tokens.append(Token(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(Token("end", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str, var: str | None):
        self.tokens = tokenize(text)
        self.i = 0
        self.var = var

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> None:
        if self.tok.text != text:
            found = self.tok.text or "end of input"
            raise ParseError(f"expected {text!r}, found {found!r}", self.tok.line, self.tok.column)
        self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.line, self.tok.column)
        return e

    def expr(self) -> Expr:
        terms = [self.term()]
        while self.tok.text in ("+", "-"):
            op = self.advance().text
            t = self.term()
            terms.append(t if op == "+" else neg(t))
        return add(*terms)

    def term(self) -> Expr:
        factors = [self.factor()]
        while self.tok.text in ("*", "/"):
            op = self.advance().text
            f = self.factor()
            factors.append(f if op == "*" else power(f, MINUS_ONE))
        return mul(*factors)

    def factor(self) -> Expr:
        negate = False
        if self.tok.text == "-":
            self.advance()
            negate = True
        b = self.base()
        if self.tok.text == "^":
            self.advance()
            b = power(b, self.factor())
        return neg(b) if negate else b

    def base(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Number(Fraction(t.text))
        if t.kind == "ident":
            self.advance()
            if self.tok.text == "(":
                if t.text not in FUNCTIONS:
                    raise ParseError(f"unknown function {t.text!r}", t.line, t.column)
                self.advance()
                arg = self.expr()
                self.expect(")")
                return FUNCTIONS[t.text](arg)
            if t.text in FUNCTIONS:
                raise ParseError(f"function {t.text!r} needs an argument", t.line, t.column)
            if t.text == "pi":
                return PI
            return Var(t.text) if t.text == self.var else Param(t.text)
        if t.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        found = t.text or "end of input"
        raise ParseError(f"unexpected {found!r}", t.line, t.column)


def _guess_variable(text: str) -> str | None:
    names = {t.text for t in tokenize(text) if t.kind == "ident"}
    for v in DEFAULT_VARIABLES:
        if v in names:
            return v
    return None


def parse(text: str, var: str | None = None) -> Expr:
    """Parse ``text``; the identifier ``var`` becomes the integration variable.

    Without ``var``, ``x`` (else ``phi``) is used when present.  Every other
    identifier except ``pi`` is a parameter.
    """
    if var is None:
        var = _guess_variable(text)
    return _Parser(text, var).parse()


# ---------------------------------------------------------------- printing

_PREC_SUM, _PREC_PRODUCT, _PREC_UNARY, _PREC_POWER, _PREC_ATOM = range(5)


def _is_negative(e: Expr) -> bool:
    return split_coeff(e)[0] < 0


def _neg_exponent(e: Expr) -> bool:
    return isinstance(e, Power) and _is_negative(e.exp)


def _fmt_number(v: Fraction) -> tuple[str, int]:
    if v.denominator == 1:
        return str(v.numerator), (_PREC_UNARY if v < 0 else _PREC_ATOM)
    return f"{v.numerator}/{v.denominator}", (_PREC_UNARY if v < 0 else _PREC_PRODUCT)


def _render(e: Expr) -> tuple[str, int]:
    """Return (text, precedence of the outermost operator)."""
    if isinstance(e, Number):
        return _fmt_number(e.value)
    if isinstance(e, Pi):
        return "pi", _PREC_ATOM
    if isinstance(e, Symbol):
        return e.name, _PREC_ATOM
    if isinstance(e, Function):
        return f"{e.name}({_render(e.arg)[0]})", _PREC_ATOM
    if isinstance(e, Sum):
        parts = []
        for i, t in enumerate(e.terms):
            if i and _is_negative(t):
                parts.append(" - " + _wrap(neg(t), _PREC_PRODUCT))
            elif i:
                parts.append(" + " + _wrap(t, _PREC_PRODUCT))
            else:
                parts.append(_wrap(t, _PREC_SUM))
        return "".join(parts), _PREC_SUM
    if isinstance(e, Power):
        if _is_negative(e.exp):
            return _render_product(e)
        base = _wrap(e.base, _PREC_ATOM)
        exp = _wrap(e.exp, _PREC_ATOM)
        return f"{base}^{exp}", _PREC_POWER
    if isinstance(e, Product):
        return _render_product(e)
    raise TypeError(type(e).__name__)


def _render_product(e: Expr) -> tuple[str, int]:
    c, rest = split_coeff(e)
    factors = rest.factors if isinstance(rest, Product) else ((rest,) if rest != Number(1) else ())
    num = [f for f in factors if not _neg_exponent(f)]
    den = [power(f.base, neg(f.exp)) for f in factors if _neg_exponent(f)]
    sign = "-" if c < 0 else ""
    c = abs(c)
    num_txt = [_wrap(f, _PREC_POWER) for f in num]
    if c.numerator != 1 or not num_txt:
        num_txt.insert(0, str(c.numerator))
    den_txt = [_wrap(f, _PREC_POWER) for f in den]
    if c.denominator != 1:
        den_txt.insert(0, str(c.denominator))
    text = "*".join(num_txt)
    if den_txt:
        d = den_txt[0] if len(den_txt) == 1 else "(" + "*".join(den_txt) + ")"
        text = f"{text}/{d}"
    if sign:
        return sign + text, _PREC_UNARY
    return text, _PREC_PRODUCT


def _wrap(e: Expr, min_prec: int) -> str:
    text, prec = _render(e)
    return text if prec >= min_prec else f"({text})"


def render(e: Expr) -> str:
    """Print ``e`` so that :func:`parse` rebuilds a structurally equal tree."""
    return _render(e)[0]
