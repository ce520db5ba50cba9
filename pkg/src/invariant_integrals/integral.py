"""IntegralSpec: integrand, variable, domain and parameter validity boxes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .expr import PI, Expr, as_expr, evaluate, mul, parameters, variables
from .parse import parse, render


@dataclass(frozen=True)
class Domain:
    kind: str  # "semi-infinite" | "interval" | "periodic"
    lo: Expr | None = None
    hi: Expr | None = None

    @classmethod
    def semi_infinite(cls) -> Domain:
        return cls("semi-infinite")

    @classmethod
    def periodic(cls, period=None) -> Domain:
        return cls("periodic", as_expr(0), mul(2, PI) if period is None else as_expr(period))

    @classmethod
    def interval(cls, lo, hi) -> Domain:
        return cls("interval", as_expr(lo), as_expr(hi))

    @property
    def period(self) -> Expr | None:
        return self.hi if self.kind == "periodic" else None

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "interval":
            d.update(lo=render(self.lo), hi=render(self.hi))
        elif self.kind == "periodic":
            d["period"] = render(self.hi)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> Domain:
        kind = d["kind"]
        if kind == "semi-infinite":
            return cls.semi_infinite()
        if kind == "periodic":
            return cls.periodic(parse(d.get("period", "2*pi")))
        if kind == "interval":
            return cls.interval(parse(d["lo"]), parse(d["hi"]))
        raise ValueError(f"unknown domain kind {kind!r}")


SEMI_INFINITE = Domain.semi_infinite()
PERIODIC_2PI = Domain.periodic()

DEFAULT_BOX = (0.25, 4.0)


@dataclass(frozen=True)
class Parameter:
    """A free parameter valid on the open box ``(lo, hi)``."""

    name: str
    lo: float = DEFAULT_BOX[0]
    hi: float = DEFAULT_BOX[1]

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise ValueError(f"parameter {self.name!r}: need finite lo < hi, got ({self.lo}, {self.hi})")

    def contains(self, value: float) -> bool:
        return self.lo < value < self.hi

    @property
    def positive(self) -> bool:
        return self.lo >= 0


@dataclass(frozen=True)
class IntegralSpec:
    integrand: Expr
    variable: str
    domain: Domain = SEMI_INFINITE
    parameters: tuple[Parameter, ...] = ()
    assumptions: tuple[str, ...] = field(default=())

    def __post_init__(self):
        vs = variables(self.integrand)
        if vs - {self.variable}:
            raise ValueError(f"integrand uses variables {sorted(vs)}, expected only {self.variable!r}")
        declared = {p.name for p in self.parameters}
        missing = parameters(self.integrand) - declared
        if missing:
            raise ValueError(f"undeclared parameters: {sorted(missing)}")
        extra = declared - parameters(self.integrand)
        if extra:
            raise ValueError(f"parameters not in integrand: {sorted(extra)}")

    @classmethod
    def from_text(cls, text: str, variable: str = "x", domain: Domain = SEMI_INFINITE, boxes=None, assumptions=()):
        e = parse(text, var=variable)
        boxes = dict(boxes or {})
        params = tuple(Parameter(n, *boxes.get(n, DEFAULT_BOX)) for n in sorted(parameters(e)))
        return cls(e, variable, domain, params, tuple(assumptions))

    @property
    def parameter_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.parameters)

    @property
    def positive_names(self) -> frozenset[str]:
        """Symbols known positive: parameters boxed in (>=0, ...), and x on (0, inf)."""
        names = {p.name for p in self.parameters if p.positive}
        if self.domain.kind == "semi-infinite":
            names.add(self.variable)
        return frozenset(names)

    def check_bindings(self, bindings: Mapping[str, float]) -> None:
        for p in self.parameters:
            if p.name not in bindings:
                raise ValueError(f"parameter {p.name!r} is not bound")
            if not p.contains(bindings[p.name]):
                raise ValueError(f"{p.name}={bindings[p.name]} outside validity box ({p.lo}, {p.hi})")

    def evaluate(self, var_value, bindings: Mapping[str, float]):
        return evaluate(self.integrand, var_value, bindings, self.variable)

    def to_dict(self) -> dict:
        return {
            "integrand": render(self.integrand),
            "variable": self.variable,
            "domain": self.domain.to_dict(),
            "parameters": [{"name": p.name, "lo": p.lo, "hi": p.hi} for p in self.parameters],
            "assumptions": list(self.assumptions),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> IntegralSpec:
        var = d["variable"]
        return cls(
            parse(d["integrand"], var=var),
            var,
            Domain.from_dict(d["domain"]),
            tuple(Parameter(p["name"], float(p["lo"]), float(p["hi"])) for p in d.get("parameters", ())),
            tuple(d.get("assumptions", ())),
        )
