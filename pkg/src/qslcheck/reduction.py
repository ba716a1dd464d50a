"""Reduce a QSL entailment to finitely many SL entailments.

``f |= g`` holds iff ``atleast(a, f) |= atleast(a, g)`` for every ``a`` in
``evalset(f)``.  The obligation for ``a = 0`` is trivially valid and is
skipped unless asked for.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Protocol

from qslcheck.atleast import atleast, size_bound
from qslcheck.evalset import EvalSet, evalset, evalset_bound
from qslcheck.semantics import DEFAULT_DOMAIN, Domain, Verdict, entails_oracle
from qslcheck.syntax import QslFormula, SlFormula, psize, qsl_size, sl_size


@dataclass(frozen=True)
class Obligation:
    alpha: Fraction
    lhs: SlFormula
    rhs: SlFormula


@dataclass(frozen=True)
class ReductionPlan:
    f: QslFormula
    g: QslFormula
    evalset: EvalSet
    obligations: tuple[Obligation, ...]

    def metrics(self) -> dict:
        lhs_sizes = [sl_size(o.lhs) for o in self.obligations]
        rhs_sizes = [sl_size(o.rhs) for o in self.obligations]
        return {
            "evalset_size": len(self.evalset),
            "evalset_bound": evalset_bound(self.f),
            "psize_lhs": psize(self.f),
            "psize_rhs": psize(self.g),
            "qsl_size_lhs": qsl_size(self.f),
            "qsl_size_rhs": qsl_size(self.g),
            "obligations": len(self.obligations),
            "max_lhs_size": max(lhs_sizes, default=0),
            "max_rhs_size": max(rhs_sizes, default=0),
            "lhs_size_bound": size_bound(self.f),
            "rhs_size_bound": size_bound(self.g),
        }


def plan(f: QslFormula, g: QslFormula, *, omit_zero: bool = True,
         true_elim: bool = True) -> ReductionPlan:
    es = evalset(f)
    obs = tuple(
        Obligation(a, atleast(a, f, true_elim=true_elim), atleast(a, g, true_elim=true_elim))
        for a in es
        if not (omit_zero and a == 0)
    )
    return ReductionPlan(f, g, es, obs)


class Backend(Protocol):
    name: str

    def sl_entails(self, lhs: SlFormula, rhs: SlFormula) -> Verdict: ...


class OracleBackend:
    """Decides SL entailments by enumerating the bounded domain."""

    name = "oracle"

    def __init__(self, domain: Domain = DEFAULT_DOMAIN):
        self.domain = domain

    def sl_entails(self, lhs: SlFormula, rhs: SlFormula) -> Verdict:
        return entails_oracle(lhs, rhs, self.domain)


@dataclass
class CheckResult:
    verdict: Verdict
    results: list[tuple[Obligation, Verdict]] = field(default_factory=list)
    failing_alpha: Fraction | None = None

    @property
    def status(self) -> str:
        return self.verdict.status


_RANK = {"entails": 0, "unknown": 1, "error": 2, "fails": 3}


def check(p: ReductionPlan, backend: Backend, *, all_obligations: bool = False) -> CheckResult:
    """Discharge the obligations in ascending ``alpha``.

    Stops at the first failure unless ``all_obligations`` is set.  The
    overall verdict is the worst individual verdict, with failures ranked
    above errors and errors above unknowns.
    """
    out = CheckResult(Verdict("entails"))
    for ob in p.obligations:
        v = backend.sl_entails(ob.lhs, ob.rhs)
        out.results.append((ob, v))
        if _RANK[v.status] > _RANK[out.verdict.status]:
            out.verdict = v
            if v.status == "fails":
                out.failing_alpha = ob.alpha
        if v.status == "fails" and not all_obligations:
            break
    return out


def entails(f: QslFormula, g: QslFormula, backend: Backend | None = None) -> CheckResult:
    return check(plan(f, g), backend or OracleBackend())


@dataclass(frozen=True)
class Differential:
    oracle: str
    reduced: str

    @property
    def agree(self) -> bool:
        return self.oracle == self.reduced


def differential(f: QslFormula, g: QslFormula, domain: Domain = DEFAULT_DOMAIN) -> Differential:
    """Direct bounded verdict next to the verdict of the reduced family."""
    direct = entails_oracle(f, g, domain).status
    reduced = check(plan(f, g), OracleBackend(domain)).status
    return Differential(direct, reduced)
