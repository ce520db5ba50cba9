"""Derivatives in ``a`` of  F(a) = int_0^inf atan(x^a) / (1 + x^2) dx.

The n-th derivative has the integrand::

    ln(x)^n * sum_{k=1..n} C_k x^((2k-1)a) / ((1 + x^(2a))^n (1 + x^2))

with integer rows ``C`` produced by the recurrence (1-based, C_0 = C_{n+1} = 0)::

    D_1 = C_1,  D_{n+1} = -C_n,
    D_m = (2m - 1) C_m - (2n - 2m + 3) C_{m-1}     (2 <= m <= n)

Rows of odd order are symmetric and rows of even order antisymmetric, which
makes every derivative integrand odd under x -> 1/x.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

from .expr import MINUS_ONE, ONE, Expr, Param, Var, add, ln, mul, power

MAX_INTEGRAND_ORDER = 64


class RowSymmetryError(AssertionError):
    def __init__(self, n: int, m: int, left: int, right: int):
        super().__init__(f"row {n}: C_{m} = {left} does not match C_{n - m + 1} = {right}")
        self.n, self.m = n, m


class RowSymmetry(enum.Enum):
    SYMMETRIC = "Symmetric"
    ANTISYMMETRIC = "Antisymmetric"


@dataclass(frozen=True)
class CoeffRow:
    n: int
    coeffs: tuple[int, ...]

    def __post_init__(self):
        if self.n < 1 or len(self.coeffs) != self.n:
            raise ValueError(f"row of order {self.n} needs {self.n} coefficients")

    def __getitem__(self, m: int) -> int:
        """1-based access; C_0 and C_{n+1} read as zero."""
        if 1 <= m <= self.n:
            return self.coeffs[m - 1]
        return 0


def next_row(row: CoeffRow) -> CoeffRow:
    n, C = row.n, row
    D = [0] * (n + 2)
    D[1] = C[1]
    D[n + 1] = -C[n]
    for m in range(2, n + 1):
        D[m] = (2 * m - 1) * C[m] - (2 * n - 2 * m + 3) * C[m - 1]
    # second form of the recurrence, indexed from the other end
    for m in range(2, n + 1):
        mirror = n - m + 2
        expected = (2 * n - 2 * m + 3) * C[mirror] - (2 * m - 1) * C[mirror - 1]
        assert D[mirror] == expected, f"recurrence index error at D_{mirror}"
    return CoeffRow(n + 1, tuple(D[1 : n + 2]))


@lru_cache(maxsize=None)
def derivative_coeffs(n: int) -> CoeffRow:
    if n < 1:
        raise ValueError("derivative order must be >= 1")
    if n == 1:
        return CoeffRow(1, (1,))
    return next_row(derivative_coeffs(n - 1))


def row_symmetry_kind(row: CoeffRow) -> RowSymmetry:
    """Symmetric for odd order, antisymmetric for even; raise on any mismatch."""
    sign = 1 if row.n % 2 else -1
    for m in range(1, row.n + 1):
        if row[m] != sign * row[row.n - m + 1]:
            raise RowSymmetryError(row.n, m, row[m], row[row.n - m + 1])
    return RowSymmetry.SYMMETRIC if sign == 1 else RowSymmetry.ANTISYMMETRIC


def build_derivative_integrand(
    n: int, var: str = "x", param: str = "a", max_order: int = MAX_INTEGRAND_ORDER
) -> Expr:
    if n > max_order:
        raise ValueError(f"order {n} exceeds max_order={max_order}")
    x, a = Var(var), Param(param)
    row = derivative_coeffs(n)
    poly = add(*(mul(c, power(x, mul(2 * k - 1, a))) for k, c in enumerate(row.coeffs, start=1)))
    return mul(
        power(ln(x), n),
        poly,
        power(add(ONE, power(x, mul(2, a))), -n),
        power(add(ONE, power(x, 2)), MINUS_ONE),
    )
