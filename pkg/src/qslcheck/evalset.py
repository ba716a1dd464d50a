"""Syntactic over-approximation of the values a QSL formula can take."""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

from qslcheck.syntax import (
    BoolChoice,
    ConvexSum,
    GuardedWand,
    InfQuant,
    Iverson,
    Max,
    Min,
    Mul,
    OneMinus,
    QStar,
    QslFormula,
    SupQuant,
    psize,
)

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class EvalSet:
    """A finite, sorted set of rationals in [0, 1] that always holds 0 and 1."""

    elems: tuple[Fraction, ...]

    @classmethod
    def of(cls, xs: Iterable) -> "EvalSet":
        vals = sorted({Fraction(x) for x in xs} | {ZERO, ONE})
        if vals[0] < 0 or vals[-1] > 1:
            raise ValueError("EvalSet members must lie in [0, 1]")
        return cls(tuple(vals))

    def __iter__(self) -> Iterator[Fraction]:
        return iter(self.elems)

    def __len__(self) -> int:
        return len(self.elems)

    def __contains__(self, x) -> bool:
        return Fraction(x) in set(self.elems)

    def successor(self, x) -> Fraction | None:
        """Smallest member strictly greater than ``x``."""
        i = bisect_right(self.elems, Fraction(x))
        return self.elems[i] if i < len(self.elems) else None

    def __str__(self) -> str:
        return "{" + ", ".join(str(x) for x in self.elems) + "}"


def evalset(f: QslFormula, _memo: dict | None = None) -> EvalSet:
    """Every value ``f`` can evaluate to is a member of ``evalset(f)``."""
    memo = {} if _memo is None else _memo
    key = id(f)
    hit = memo.get(key)
    if hit is not None:
        return hit[1]
    out = _evalset(f, memo)
    memo[key] = (f, out)
    return out


def _evalset(f: QslFormula, memo: dict) -> EvalSet:
    if isinstance(f, Iverson):
        return EvalSet((ZERO, ONE))
    if isinstance(f, BoolChoice):
        return EvalSet.of(evalset(f.then, memo).elems + evalset(f.other, memo).elems)
    if isinstance(f, (SupQuant, InfQuant)):
        return evalset(f.body, memo)
    if isinstance(f, GuardedWand):
        return evalset(f.body, memo)
    if isinstance(f, OneMinus):
        return EvalSet.of(1 - a for a in evalset(f.arg, memo))
    g, u = evalset(f.left, memo), evalset(f.right, memo)
    if isinstance(f, ConvexSum):
        p, q = f.p, 1 - f.p
        return EvalSet.of(p * a + q * b for a in g for b in u)
    if isinstance(f, (Mul, QStar)):
        return EvalSet.of(a * b for a in g for b in u)
    if isinstance(f, Max):
        return EvalSet.of(max(a, b) for a in g for b in u)
    if isinstance(f, Min):
        return EvalSet.of(min(a, b) for a in g for b in u)
    raise TypeError(f"not a QSL formula: {f!r}")


def evalset_bound(f: QslFormula) -> int:
    """The cardinality bound ``2 ** (psize(f) + 1)``."""
    return 2 ** (psize(f) + 1)


@dataclass(frozen=True)
class SoundnessReport:
    observed: tuple[Fraction, ...]
    violations: tuple[Fraction, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def soundness_check(f: QslFormula, domain=None) -> SoundnessReport:
    """Values of ``f`` seen on the bounded domain, and any outside ``evalset(f)``."""
    from qslcheck.semantics import DEFAULT_DOMAIN, table

    seen = {Fraction(v) for v in table(f, domain or DEFAULT_DOMAIN)}
    es = evalset(f)
    return SoundnessReport(tuple(sorted(seen)), tuple(sorted(v for v in seen if v not in es)))
