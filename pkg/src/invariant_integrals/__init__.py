"""Detect and prove parameter-invariant definite integrals.

Typical use::

    from invariant_integrals import IntegralSpec, detect

    spec = IntegralSpec.from_text("atan(x^a)/(1+x^2)", boxes={"a": (-5, 5)})
    report = detect(spec)
    report.verdict, report.certificate.value   # Invariant, pi^2/8
"""

from .catalog import (
    CatalogEntry,
    ConditionError,
    FamilyId,
    builtin_catalog,
    dump_catalog,
    instantiate_family,
    load_catalog,
    random_instance,
    symmetry_mutant,
    verify_catalog,
)
from .derivatives import CoeffRow, RowSymmetry, build_derivative_integrand, derivative_coeffs, row_symmetry_kind
from .detector import DetectionReport, detect
from .expr import Expr, differentiate, evaluate, simplify_basic, substitute
from .integral import PERIODIC_2PI, SEMI_INFINITE, Domain, IntegralSpec, Parameter
from .parse import GRAMMAR, ParseError, parse, render
from .prover import ProofCertificate, ProofStep, half_period_shift, prove, rewrite_with_trace, split_and_fold, verify_certificate
from .quadrature import (
    QuadResult,
    Verdict,
    integrate_folded_semi_infinite,
    integrate_periodic,
    probe_invariance,
    refine_until_stable,
)
from .symmetry import Duality, PolyCoeffs, classify_duality, fold_residue, is_antipalindromic, is_palindromic

__all__ = [name for name in dir() if not name.startswith("_")]
