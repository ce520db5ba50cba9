"""Command-line front end.

Exit status: 0 on success, 1 when a check fails (NotProved, Undecided, a
failing catalog entry), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from typing import Sequence

from .catalog import dump_catalog, builtin_catalog, load_catalog, verify_catalog
from .derivatives import derivative_coeffs, row_symmetry_kind
from .detector import detect
from .expr import Number, parameters, substitute
from .integral import PERIODIC_2PI, SEMI_INFINITE, IntegralSpec, Parameter, DEFAULT_BOX
from .parse import GRAMMAR, ParseError, parse, render
from .prover import prove
from .quadrature import Verdict, integrate_folded_semi_infinite, integrate_periodic

DOMAINS = {"semi-infinite": SEMI_INFINITE, "periodic-2pi": PERIODIC_2PI}


class UsageError(Exception):
    pass


def _positive_float(text: str) -> float:
    v = float(text)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {text!r}")
    return v


def _split_assignments(items: Sequence[str]) -> list[tuple[str, str]]:
    out = []
    for item in items:
        for part in item.split(","):
            part = part.strip()
            if not part:
                continue
            name, sep, value = part.partition("=")
            if not sep or not name.strip() or not value.strip():
                raise UsageError(f"expected name=value, got {part!r}")
            out.append((name.strip(), value.strip()))
    return out


def _number(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a number: {text!r}") from None


def _parse_ranges(items: Sequence[str]) -> tuple[dict, dict]:
    """``name=lo:hi`` gives a sampling box; ``name=value`` pins the parameter."""
    boxes, pins = {}, {}
    for name, value in _split_assignments(items):
        if ":" in value:
            lo, _, hi = value.partition(":")
            lo, hi = float(_number(lo)), float(_number(hi))
            if not lo < hi:
                raise UsageError(f"empty range for {name}: {value}")
            boxes[name] = (lo, hi)
        else:
            pins[name] = _number(value)
    return boxes, pins


def _build_spec(args) -> IntegralSpec:
    var = args.var or ("phi" if args.domain == "periodic-2pi" else "x")
    integrand = parse(args.expr, var=var)
    boxes, pins = _parse_ranges(args.param_range or [])
    _, extra_pins = _parse_ranges(args.params or [])
    pins.update(extra_pins)
    names = parameters(integrand)
    unknown = (set(boxes) | set(pins)) - names
    if unknown:
        raise UsageError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
    for name, value in pins.items():
        integrand = substitute(integrand, name, Number(value))
    params = tuple(Parameter(n, *boxes.get(n, DEFAULT_BOX)) for n in sorted(parameters(integrand)))
    return IntegralSpec(integrand, var, DOMAINS[args.domain], params)


def _emit(args, structured: dict, text: str):
    if args.format == "structured":
        print(json.dumps(structured, indent=2))
    else:
        print(text)


def _format_bindings(b: dict) -> str:
    return ", ".join(f"{k}={v:.6g}" for k, v in sorted(b.items())) or "(no parameters)"


def _certificate_text(cert) -> list[str]:
    lines = []
    for i, s in enumerate(cert.steps):
        mark = "ok" if s.checked else "unchecked" if s.checked is None else "FAILED"
        lines.append(f"  {i}. [{s.rule}] {render(s.before)}  ->  {render(s.after)}   ({mark})")
        if s.justification:
            lines.append(f"       {s.justification}")
    if cert.proved:
        lines.append(f"  value: {render(cert.value)} = {cert.numeric_value():.15g}")
    else:
        lines.append(f"  not proved: {cert.conclusion.reason}")
    return lines


# ---------------------------------------------------------------- subcommands


def cmd_detect(args) -> int:
    spec = _build_spec(args)
    report = detect(spec, sample_count=args.samples, tol=args.tol, seed=args.seed)
    lines = [f"integral of {render(spec.integrand)} d{spec.variable} over {spec.domain.kind}"]
    lines.append(f"verdict: {report.verdict.value}")
    for b, v in report.probes:
        lines.append(f"  probe {_format_bindings(b)}: {v:.15g}")
    if report.value_estimate is not None:
        lines.append(f"estimate: {report.value_estimate:.15g}")
    if report.certificate is not None:
        lines.append("certificate:")
        lines += _certificate_text(report.certificate)
    lines += [f"note: {n}" for n in report.notes]
    _emit(args, report.to_dict(), "\n".join(lines))
    return 1 if report.verdict is Verdict.UNDECIDED else 0


def cmd_prove(args) -> int:
    spec = _build_spec(args)
    cert = prove(spec)
    lines = [f"integral of {render(spec.integrand)} d{spec.variable} over {spec.domain.kind}"]
    lines += [f"assume {a}" for a in cert.assumptions]
    lines += _certificate_text(cert)
    _emit(args, cert.to_dict(), "\n".join(lines))
    return 0 if cert.proved else 1


def cmd_quad(args) -> int:
    var = args.var or ("phi" if args.domain == "periodic-2pi" else "x")
    f = parse(args.expr, var=var)
    bindings = {k: float(_number(v)) for k, v in _split_assignments(args.params or [])}
    missing = parameters(f) - set(bindings)
    if missing:
        raise UsageError(f"bind every parameter with --params; missing: {', '.join(sorted(missing))}")
    if args.domain == "periodic-2pi":
        res = integrate_periodic(f, bindings, tol=args.tol, var=var)
    else:
        res = integrate_folded_semi_infinite(f, bindings, tol=args.tol, var=var)
    structured = {
        "integrand": render(f),
        "variable": var,
        "domain": args.domain,
        "params": bindings,
        "value": res.value,
        "error_estimate": res.error_estimate,
        "evaluations": res.evaluations,
        "converged": res.converged,
    }
    text = f"{res.value:.16g}  (error estimate {res.error_estimate:.2g}, {res.evaluations} evaluations"
    text += ", converged)" if res.converged else ", NOT converged)"
    _emit(args, structured, text)
    return 0 if res.converged else 1


def cmd_gen_coeffs(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    row = derivative_coeffs(args.n)
    kind = row_symmetry_kind(row)
    _emit(args, {"n": row.n, "coeffs": list(row.coeffs), "symmetry": kind.value}, " ".join(map(str, row.coeffs)))
    return 0


def cmd_verify_catalog(args) -> int:
    if args.export:
        print(dump_catalog(builtin_catalog(), lines=args.format == "text"))
        return 0
    if args.catalog:
        with open(args.catalog, encoding="utf-8") as fh:
            entries = load_catalog(fh.read())
    else:
        entries = builtin_catalog()
    summary = verify_catalog(entries, tol=args.tol, samples=args.samples, seed=args.seed)
    lines = []
    for o in summary.outcomes:
        status = "PASS" if o.passed else "FAIL"
        expected = "NotInvariant" if o.entry.expected is None else render(o.entry.expected)
        line = f"{status}  {o.entry.family.value:20s} {render(o.entry.spec.integrand)}  expected {expected}"
        lines.append(line + (f"  ({o.reason})" if o.reason else ""))
    lines.append(
        f"{summary.passed}/{summary.total} passed, worst deviation {summary.worst_deviation:.3g}"
    )
    _emit(args, summary.to_dict(), "\n".join(lines))
    return 0 if summary.all_passed else 1


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=_positive_float, default=None, help="tolerance")
    common.add_argument("--samples", type=int, default=3, help="probe samples (>= 2)")
    common.add_argument("--seed", type=int, default=0, help="sampling seed")
    common.add_argument("--format", choices=("text", "structured"), default="text")

    integral = argparse.ArgumentParser(add_help=False)
    integral.add_argument("--expr", required=True, help="integrand, e.g. 'atan(x^a)/(1+x^2)'")
    integral.add_argument("--var", default=None, help="integration variable (default x, or phi when periodic)")
    integral.add_argument("--domain", choices=tuple(DOMAINS), default="semi-infinite")
    integral.add_argument("--params", action="append", help="pin parameters: name=value[,name=value...]")

    ranges = argparse.ArgumentParser(add_help=False)
    ranges.add_argument(
        "--param-range", action="append", help="name=lo:hi sampling box, or name=value to pin (repeatable)"
    )

    parser = argparse.ArgumentParser(
        prog="invariant-integrals",
        description="Detect, prove and evaluate parameter-invariant definite integrals.",
        epilog=GRAMMAR,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("detect", parents=[common, integral, ranges], help="probe numerically, then try to prove")
    sub.add_parser("prove", parents=[common, integral, ranges], help="attempt a symbolic proof")
    sub.add_parser("quad", parents=[common, integral], help="integrate at fixed parameter values")
    g = sub.add_parser("gen-coeffs", parents=[common], help="coefficient row of the n-th derivative integrand")
    g.add_argument("--n", type=int, required=True)
    v = sub.add_parser("verify-catalog", parents=[common], help="run the detector over a catalog")
    v.add_argument("--catalog", help="JSON list or JSON-lines file of {family, params, expected}")
    v.add_argument("--export", action="store_true", help="print the built-in catalog instead of verifying it")
    return parser


COMMANDS = {
    "detect": cmd_detect,
    "prove": cmd_prove,
    "quad": cmd_quad,
    "gen-coeffs": cmd_gen_coeffs,
    "verify-catalog": cmd_verify_catalog,
}

DEFAULT_TOLS = {"detect": 1e-9, "verify-catalog": 1e-9, "quad": 1e-12}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.tol is None:
        args.tol = DEFAULT_TOLS.get(args.command, 1e-9)
    try:
        if args.samples < 2:
            raise UsageError("--samples must be at least 2")
        return COMMANDS[args.command](args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(GRAMMAR, file=sys.stderr)
        return 2
    except (UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc, UsageError):
            parser.print_usage(sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
