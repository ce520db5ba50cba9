"""Numerical oracle: tanh-sinh on folded integrands, trapezoid for periodic ones.

Semi-infinite integrals are never truncated.  The reciprocal fold turns
``int_0^inf f`` into ``int_0^1 [f(x) + f(1/x)/x^2] dx``, and tanh-sinh
absorbs the logarithmic endpoint singularities at x -> 0+.

Nodes where binary64 evaluation overflows (``x**(7*a)`` for tiny x, say) are
re-evaluated in mpmath, so results stay deterministic and finite.

A second, deliberately naive integrator (:func:`adaptive_bisection`) works
on the original integrand over a geometric panel partition of (0, X] with no
fold at all; it cross-checks the first.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import mpmath
import numpy as np
from scipy.special import expit

from .expr import EvaluationError, Expr, evaluate, evaluate_mp, single_variable
from .integral import IntegralSpec

EPS = np.finfo(float).eps

# tanh-sinh schedule: t in [-T, T], 2^6 + 1 nodes doubling through 2^12 + 1
TS_HALF_WIDTH = 5.4  # exp(-pi*sinh(5.4)) ~ 1.6e-151: smallest node distance to 0
TS_START_INTERVALS = 64
TS_LEVELS = 6

DEFAULT_TOL = 1e-12
PROBE_TOL = 1e-9


class QuadratureError(ArithmeticError):
    pass


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    evaluations: int
    converged: bool


def _scalar(e: Expr, x: float, params, var) -> float:
    try:
        return float(evaluate(e, float(x), params, var))
    except EvaluationError:
        return math.nan


def _values(e: Expr, xs: np.ndarray, params, var) -> np.ndarray:
    try:
        v = np.array(evaluate(e, xs, params, var), dtype=float, copy=True)
    except EvaluationError:
        # an intermediate under/overflow can fake a domain error; retry node by node
        v = np.array([_scalar(e, x, params, var) for x in np.ravel(xs)]).reshape(np.shape(xs))
    bad = np.flatnonzero(~np.isfinite(v))
    for i in bad:
        v.flat[i] = float(evaluate_mp(e, mpmath.mpf(float(xs.flat[i])), params, var))
    return v


def _fold_values(e: Expr, x: np.ndarray, params, var):
    """(f(x) + f(1/x)/x^2, |f(x)| + |f(1/x)/x^2|) with overflow handled in mpmath."""
    fx = _values(e, x, params, var)
    y = 1.0 / x
    with np.errstate(all="ignore"):
        fy = _values(e, y, params, var) * y * y
    for i in np.flatnonzero(~np.isfinite(fy)):
        xi = mpmath.mpf(float(x[i]))
        with mpmath.workdps(30):
            fy[i] = float(evaluate_mp(e, 1 / xi, params, var) / xi**2)
    return fx + fy, np.abs(fx) + np.abs(fy)


MP_DPS = 34
MP_ROUNDOFF = 10.0 ** (2 - MP_DPS)


def _fold_values_mp(e: Expr, x: np.ndarray, params, var, dps: int = MP_DPS):
    vals = np.empty(len(x))
    mags = np.empty(len(x))
    with mpmath.workdps(dps):
        for i, xi in enumerate(x):
            xm = mpmath.mpf(float(xi))
            a = evaluate_mp(e, xm, params, var, dps)
            b = evaluate_mp(e, 1 / xm, params, var, dps) / xm**2
            vals[i] = float(a + b)
            mags[i] = float(abs(a) + abs(b))
    return vals, mags


def _ts_level(level: int):
    """Nodes added at ``level``: (x, 1 - x, weight, step)."""
    h0 = TS_HALF_WIDTH / (TS_START_INTERVALS // 2)
    h = h0 / 2**level
    if level == 0:
        j = np.arange(-(TS_START_INTERVALS // 2), TS_START_INTERVALS // 2 + 1)
    else:
        half = TS_START_INTERVALS // 2 * 2 ** (level - 1)
        j = 2 * np.arange(-half, half) + 1
    t = j * h
    s = math.pi * np.sinh(t)
    x, xc = expit(s), expit(-s)
    w = math.pi * np.cosh(t) * x * xc
    return x, xc, w, h


def tanh_sinh_unit(
    g: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]],
    tol: float = DEFAULT_TOL,
    evals_per_node: int = 1,
    roundoff: float = EPS,
) -> QuadResult:
    """Integrate over (0, 1).  ``g(x, 1 - x)`` returns (values, term magnitudes).

    ``roundoff`` is the unit roundoff of the arithmetic ``g`` uses; it sets
    the error floor ``8 * roundoff * h * sum(w |terms|)``.
    """
    total = 0.0
    total_abs = 0.0
    prev = None
    evaluations = 0
    value = err = math.nan
    for level in range(TS_LEVELS + 1):
        x, xc, w, h = _ts_level(level)
        vals, mags = g(x, xc)
        evaluations += evals_per_node * len(x)
        total += float(np.dot(w, vals))
        total_abs += float(np.dot(w, mags))
        value = h * total
        floor = 8 * roundoff * h * total_abs
        if prev is not None:
            err = float(max(abs(value - prev), floor))
            if err <= tol * max(1.0, abs(value)):
                return QuadResult(value, err, evaluations, True)
            if abs(value - prev) <= floor:
                # rounding-limited: more nodes cannot improve the estimate
                return QuadResult(value, err, evaluations, False)
        prev = value
    return QuadResult(value, err, evaluations, False)


def _spec_var(f: Expr, var: str | None) -> str | None:
    return var if var is not None else single_variable(f)


def integrate_folded_semi_infinite(
    f: Expr, params: Mapping[str, float] | None = None, tol: float = DEFAULT_TOL, var: str | None = None
) -> QuadResult:
    """``int_0^inf f dx`` as ``int_0^1 [f(x) + f(1/x)/x^2] dx`` by tanh-sinh."""
    var = _spec_var(f, var)
    params = dict(params or {})

    def g(x, xc):
        return _fold_values(f, x, params, var)

    res = tanh_sinh_unit(g, tol, evals_per_node=2)
    if res.converged or not math.isfinite(res.value):
        return res

    # Rounding-limited: an anti-dual integrand cancels at every node, leaving
    # only binary64 noise.  Redo the node sums in extended precision.
    def g_mp(x, xc):
        return _fold_values_mp(f, x, params, var)

    again = tanh_sinh_unit(g_mp, tol, evals_per_node=2, roundoff=MP_ROUNDOFF)
    return QuadResult(again.value, again.error_estimate, res.evaluations + again.evaluations, again.converged)


def integrate_interval(
    f: Expr, lo: float, hi: float, params: Mapping[str, float] | None = None, tol: float = DEFAULT_TOL, var: str | None = None
) -> QuadResult:
    var = _spec_var(f, var)
    params = dict(params or {})
    width = hi - lo

    def g(u, uc):
        # measure from the nearer endpoint so both ends keep full precision
        x = np.where(u <= 0.5, lo + width * u, hi - width * uc)
        v = _values(f, x, params, var) * width
        return v, np.abs(v)

    return tanh_sinh_unit(g, tol)


def integrate_periodic(
    f: Expr,
    params: Mapping[str, float] | None = None,
    points: int = 64,
    tol: float = DEFAULT_TOL,
    var: str | None = None,
    period: float = 2 * math.pi,
    max_points: int = 2**16,
) -> QuadResult:
    """Trapezoid rule over one period, doubling ``points`` until two estimates agree."""
    var = _spec_var(f, var)
    params = dict(params or {})
    n = points
    phi = period * np.arange(n) / n
    v = _values(f, phi, params, var)
    total, total_abs = float(v.sum()), float(np.abs(v).sum())
    evaluations = n
    prev = period * total / n
    while n < max_points:
        phi = period * (2 * np.arange(n) + 1) / (2 * n)
        v = _values(f, phi, params, var)
        total += float(v.sum())
        total_abs += float(np.abs(v).sum())
        evaluations += n
        n *= 2
        value = period * total / n
        floor = 8 * EPS * period * total_abs / n
        err = float(max(abs(value - prev), floor))
        if err <= tol * max(1.0, abs(value)):
            return QuadResult(value, err, evaluations, True)
        if abs(value - prev) <= floor:
            return QuadResult(value, err, evaluations, False)
        prev = value
    return QuadResult(prev, err, evaluations, False)


def integrate_spec(spec: IntegralSpec, bindings: Mapping[str, float], tol: float = DEFAULT_TOL) -> QuadResult:
    spec.check_bindings(bindings)
    f, var, dom = spec.integrand, spec.variable, spec.domain
    if dom.kind == "semi-infinite":
        return integrate_folded_semi_infinite(f, bindings, tol, var)
    lo = float(evaluate(dom.lo, None, bindings))
    hi = float(evaluate(dom.hi, None, bindings))
    if dom.kind == "periodic":
        return integrate_periodic(f, bindings, tol=tol, var=var, period=hi - lo)
    return integrate_interval(f, lo, hi, bindings, tol, var)


# ---------------------------------------------------------------- naive oracle

_GL_X, _GL_W = np.polynomial.legendre.leggauss(15)


def adaptive_bisection(
    f: Expr,
    panels: Sequence[tuple[float, float]],
    params: Mapping[str, float] | None = None,
    tol: float = 1e-10,
    var: str | None = None,
    max_depth: int = 60,
) -> QuadResult:
    """Globally bisect panels until 15-point Gauss-Legendre agrees with its two halves."""
    var = _spec_var(f, var)
    params = dict(params or {})
    local_tol = tol / max(len(panels), 1)
    work = [(a, b, 0) for a, b in panels]
    value = 0.0
    err = 0.0
    evaluations = 0
    converged = True
    while work:
        a = np.array([p[0] for p in work])
        b = np.array([p[1] for p in work])
        m = 0.5 * (a + b)
        # whole panel, left half, right half
        lo = np.concatenate([a, a, m])
        hi = np.concatenate([b, m, b])
        xs = 0.5 * (hi - lo)[:, None] * _GL_X[None, :] + 0.5 * (hi + lo)[:, None]
        vals = _values(f, xs.ravel(), params, var).reshape(xs.shape)
        evaluations += vals.size
        q = 0.5 * (hi - lo) * (vals @ _GL_W)
        k = len(work)
        whole, halves = q[:k], q[k : 2 * k] + q[2 * k :]
        diff = np.abs(whole - halves)
        nxt = []
        for i, (pa, pb, depth) in enumerate(work):
            if diff[i] <= local_tol or depth >= max_depth:
                value += float(halves[i])
                err += float(diff[i])
                converged &= bool(diff[i] <= local_tol)
            else:
                nxt += [(pa, m[i], depth + 1), (m[i], pb, depth + 1)]
        work = nxt
    return QuadResult(value, err, evaluations, converged)


def naive_semi_infinite(
    f: Expr,
    params: Mapping[str, float] | None = None,
    tol: float = 1e-10,
    var: str | None = None,
    low_exp: int = 200,
    high_exp: int = 100,
) -> QuadResult:
    """Integrate f on (2^-low_exp, 2^high_exp] by bisection, plus an end-piece estimate.

    No reciprocal map is used.  The two excluded ends are estimated by
    ``|x f(x)|`` at the cut points (exact for ~1/x^2 tails and mild
    logarithmic singularities at 0) and added to the error estimate.
    """
    var = _spec_var(f, var)
    params = dict(params or {})
    panels = [(2.0 ** -(j + 1), 2.0**-j) for j in range(low_exp)]
    panels += [(2.0**j, 2.0 ** (j + 1)) for j in range(high_exp)]
    res = adaptive_bisection(f, panels, params, tol, var)
    ends = np.array([2.0**-low_exp, 2.0**high_exp])
    tail = float(np.sum(np.abs(ends * _values(f, ends, params, var))))
    return QuadResult(res.value, res.error_estimate + tail, res.evaluations + 2, res.converged and tail <= tol)


def refine_until_stable(
    f: Expr,
    params: Mapping[str, float] | None = None,
    accuracy: float = 1e-8,
    var: str | None = None,
    tols: Sequence[float] = (1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11, 1e-12),
) -> QuadResult:
    """Brute-force refinement: tighten the naive oracle until two runs agree to ``accuracy``."""
    prev = None
    res = None
    for tol in tols:
        res = naive_semi_infinite(f, params, tol, var)
        if prev is not None and abs(res.value - prev.value) <= accuracy:
            return QuadResult(res.value, abs(res.value - prev.value), res.evaluations, True)
        prev = res
    return QuadResult(res.value, res.error_estimate, res.evaluations, False)


# ---------------------------------------------------------------- invariance probe


class Verdict(enum.Enum):
    INVARIANT = "Invariant"
    NOT_INVARIANT = "NotInvariant"
    UNDECIDED = "Undecided"


@dataclass(frozen=True)
class ProbeResult:
    verdict: Verdict
    values: tuple[float, ...]
    samples: tuple[dict, ...]
    results: tuple[QuadResult, ...] = field(default=())

    @property
    def invariant(self) -> bool | None:
        if self.verdict is Verdict.UNDECIDED:
            return None
        return self.verdict is Verdict.INVARIANT

    @property
    def spread(self) -> float:
        return max(self.values) - min(self.values) if self.values else 0.0


def resolves(r: QuadResult, tol: float) -> bool:
    """Accurate enough for a probe at ``tol``.

    Either converged, or its error bar is at most half the probe margin, so
    two error bars together cannot fake a disagreement.
    """
    if not math.isfinite(r.value):
        return False
    return r.converged or r.error_estimate <= 0.5 * tol * (1.0 + abs(r.value))


def values_agree(values: Sequence[float], tol: float) -> bool:
    if not values:
        return True
    scale = 1.0 + max(abs(v) for v in values)
    return all(abs(u - v) <= tol * scale for u, v in itertools.combinations(values, 2))


def probe_invariance(
    spec: IntegralSpec,
    samples: Sequence[Mapping[str, float]],
    tol: float = PROBE_TOL,
    quad_tol: float = DEFAULT_TOL,
) -> ProbeResult:
    """Integrate at each parameter sample; invariant iff all values agree within tol*(1+max|v|)."""
    if len(samples) < 2:
        raise ValueError("an invariance probe needs at least two samples")
    results = []
    for s in samples:
        try:
            results.append(integrate_spec(spec, s, quad_tol))
        except (QuadratureError, OverflowError, EvaluationError, ZeroDivisionError):
            results.append(QuadResult(math.nan, math.inf, 0, False))
    values = tuple(r.value for r in results)
    samples = tuple(dict(s) for s in samples)
    if not all(resolves(r, tol) for r in results):
        return ProbeResult(Verdict.UNDECIDED, values, samples, tuple(results))
    verdict = Verdict.INVARIANT if values_agree(values, tol) else Verdict.NOT_INVARIANT
    return ProbeResult(verdict, values, samples, tuple(results))


def sample_parameters(spec: IntegralSpec, count: int, seed: int = 0, margin: float = 0.05) -> list[dict]:
    """Scrambled Halton points inside each parameter box, kept off the boundary."""
    from scipy.stats import qmc

    if not spec.parameters:
        return [{} for _ in range(count)]
    u = qmc.Halton(d=len(spec.parameters), scramble=True, seed=seed).random(count)
    out = []
    for row in u:
        s = {}
        for p, ui in zip(spec.parameters, row):
            width = p.hi - p.lo
            s[p.name] = float(p.lo + width * (margin + (1 - 2 * margin) * ui))
        out.append(s)
    return out
