"""Two-step invariance detection: numeric probe first, symbolic proof second."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .integral import IntegralSpec
from .prover import ProofCertificate, prove
from .quadrature import DEFAULT_TOL, PROBE_TOL, ProbeResult, Verdict, probe_invariance, sample_parameters

CERTIFICATE_AGREEMENT = 1e-9
DEFAULT_SAMPLES = 3


@dataclass(frozen=True)
class DetectionReport:
    spec: IntegralSpec
    verdict: Verdict
    value_estimate: float | None
    certificate: ProofCertificate | None
    probes: tuple[tuple[dict, float], ...]
    notes: tuple[str, ...] = field(default=())

    @property
    def proved(self) -> bool:
        return self.certificate is not None and self.certificate.proved

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "verdict": self.verdict.value,
            "value_estimate": self.value_estimate,
            "probes": [{"bindings": dict(b), "value": v} for b, v in self.probes],
            "certificate": self.certificate.to_dict() if self.certificate else None,
            "notes": list(self.notes),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: Mapping) -> DetectionReport:
        cert = d.get("certificate")
        return cls(
            IntegralSpec.from_dict(d["spec"]),
            Verdict(d["verdict"]),
            d.get("value_estimate"),
            ProofCertificate.from_dict(cert) if cert else None,
            tuple((dict(p["bindings"]), float(p["value"])) for p in d.get("probes", ())),
            tuple(d.get("notes", ())),
        )


def _probe(spec, samples, tol, quad_tol) -> ProbeResult:
    if not spec.parameters:
        # nothing to vary: one evaluation decides the value, invariance is trivial
        samples = samples[:1] * 2
    return probe_invariance(spec, samples, tol=tol, quad_tol=quad_tol)


def detect(
    spec: IntegralSpec,
    sample_count: int = DEFAULT_SAMPLES,
    tol: float = PROBE_TOL,
    seed: int = 0,
    samples: Sequence[Mapping[str, float]] | None = None,
    quad_tol: float = DEFAULT_TOL,
) -> DetectionReport:
    """Probe ``spec`` at several parameter bindings; on agreement, try to prove it.

    ``samples`` overrides the low-discrepancy draw.  An Undecided probe is
    retried once with fresh samples before being reported.
    """
    if samples is None and sample_count < 2:
        raise ValueError("sample_count must be at least 2")
    notes = []
    draw = list(samples) if samples is not None else sample_parameters(spec, sample_count, seed)
    result = _probe(spec, draw, tol, quad_tol)
    if result.verdict is Verdict.UNDECIDED:
        notes.append("first probe undecided; resampled once")
        redraw = sample_parameters(spec, max(sample_count, len(draw)), seed + 1)
        result = _probe(spec, redraw, tol, quad_tol)

    probes = tuple((dict(b), float(v)) for b, v in zip(result.samples, result.values))
    if result.verdict is not Verdict.INVARIANT:
        estimate = None
        if result.verdict is Verdict.NOT_INVARIANT:
            notes.append("probe values disagree; proof not attempted")
        return DetectionReport(spec, result.verdict, estimate, None, probes, tuple(notes))

    estimate = float(sum(result.values) / len(result.values))
    cert = prove(spec)
    if not cert.proved:
        notes.append(f"no proof: {cert.conclusion.reason}")
        return DetectionReport(spec, result.verdict, estimate, None, probes, tuple(notes))
    gap = abs(cert.numeric_value() - estimate)
    if gap > CERTIFICATE_AGREEMENT:
        notes.append(f"certificate value disagrees with estimate by {gap:.3g}; discarded")
        return DetectionReport(spec, result.verdict, estimate, None, probes, tuple(notes))
    return DetectionReport(spec, result.verdict, estimate, cert, probes, tuple(notes))
