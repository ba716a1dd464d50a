"""Seeded random generators for formulas and programs.

Used by the differential suites and by ``qslcheck fuzz``.  Every generator
takes a :class:`random.Random` so a seed fixes the whole stream.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Sequence

from qslcheck.semantics import DEFAULT_DOMAIN, Domain
from qslcheck.syntax import (
    And,
    Alloc,
    Assign,
    Atom,
    BoolChoice,
    ConvexSum,
    Exists,
    Free,
    GuardedWand,
    InfQuant,
    Iverson,
    Lookup,
    Max,
    Min,
    Mul,
    Mutate,
    OneMinus,
    Or,
    Program,
    QStar,
    QslFormula,
    SlFormula,
    Star,
    SupQuant,
    Var,
    Wand,
    Lit,
)

PROBS = (Fraction(1, 2), Fraction(1, 3), Fraction(2, 5), Fraction(3, 4), Fraction(1, 10))
PURE_KINDS = ("true", "false", "eq", "neq")
HEAP_KINDS = ("emp", "pto", "eq_emp", "neq_emp")
ALL_KINDS = PURE_KINDS + HEAP_KINDS + ("ls",)
QSH_KINDS = PURE_KINDS + HEAP_KINDS


class Gen:
    """Random syntax over a fixed set of free variables.

    ``bound`` names are used for quantifiers; they may shadow nothing, so
    formulas stay small in free variables and cheap to enumerate.
    """

    def __init__(self, rng: random.Random, names: Sequence[str] = ("x", "y"),
                 bound: Sequence[str] = ("v",), domain: Domain = DEFAULT_DOMAIN,
                 literal_rate: float = 0.1):
        self.rng = rng
        self.names = tuple(names)
        self.bound = tuple(bound)
        self.domain = domain
        self.literal_rate = literal_rate

    # terms and atoms -----------------------------------------------------

    def term(self, scope: Sequence[str] = ()):
        if self.rng.random() < self.literal_rate:
            return Lit(self.rng.choice(self.domain.values))
        return Var(self.rng.choice(self.names + tuple(scope)))

    def atom(self, kinds: Sequence[str] = ALL_KINDS, scope: Sequence[str] = ()) -> Atom:
        kind = self.rng.choice(kinds)
        if kind in ("true", "false", "emp"):
            return Atom(kind)
        if kind == "pto":
            n = 1 + self.domain.k
        else:
            n = 2
        return Atom(kind, tuple(self.term(scope) for _ in range(n)))

    def pto(self, scope: Sequence[str] = ()) -> Atom:
        return self.atom(("pto",), scope)

    # QSL ------------------------------------------------------------------

    def qsl(self, max_psize: int, depth: int = 3, kinds: Sequence[str] = ALL_KINDS,
            full: bool = True, wands: bool = True, scope: tuple = ()) -> QslFormula:
        """A formula with ``psize <= max_psize``.

        ``full`` enables the operators outside the symbolic-heap fragment
        (``1 - f``, ``max``, ``min``, ``J``, products and general wands).
        """
        r = self.rng
        if depth <= 0:
            return Iverson(self.atom(kinds, scope))
        leaf = 0.3 if depth > 1 else 0.5
        ops = ["choice"]
        if max_psize > 0:
            ops += ["sum", "qstar"]
        free_bound = [b for b in self.bound if b not in scope]
        if free_bound:
            ops.append("sup")
        if wands:
            ops.append("wand")
        if full:
            ops += ["oneminus", "max", "min"] + (["mul"] if max_psize > 0 else [])
            if free_bound:
                ops.append("inf")
        if r.random() < leaf:
            return Iverson(self.atom(kinds, scope))
        op = r.choice(ops)
        sub = depth - 1
        if op in ("sum", "qstar", "mul"):
            left_budget = r.randint(0, max_psize - 1)
            left = self.qsl(left_budget, sub, kinds, full, wands, scope)
            right = self.qsl(max_psize - 1 - left_budget, sub, kinds, full, wands, scope)
            if op == "sum":
                return ConvexSum(r.choice(PROBS), left, right)
            return (QStar if op == "qstar" else Mul)(left, right)
        if op in ("max", "min", "choice"):
            left_budget = r.randint(0, max_psize)
            left = self.qsl(left_budget, sub, kinds, full, wands, scope)
            right = self.qsl(max_psize - left_budget, sub, kinds, full, wands, scope)
            if op == "choice":
                guards = [k for k in kinds if k in PURE_KINDS] or ["eq"]
                return BoolChoice(self.atom(guards, scope), left, right)
            return (Max if op == "max" else Min)(left, right)
        if op == "oneminus":
            return OneMinus(self.qsl(max_psize, sub, kinds, full, wands, scope))
        if op in ("sup", "inf"):
            v = r.choice(free_bound)
            body = self.qsl(max_psize, sub, kinds, full, wands, scope + (v,))
            return (SupQuant if op == "sup" else InfQuant)(v, body)
        guard = self.pto(scope) if not full else self.atom(kinds, scope)
        return GuardedWand(guard, self.qsl(max_psize, sub, kinds, full, wands, scope))

    def qsh(self, max_psize: int, depth: int = 3, extended: bool = False) -> QslFormula:
        return self.qsl(max_psize, depth, QSH_KINDS, full=False, wands=extended)

    # SL -------------------------------------------------------------------

    def sl(self, depth: int = 3, wands: bool = True, scope: tuple = ()) -> SlFormula:
        """An S1 formula (S2 when ``wands`` is off): no negation or universals."""
        r = self.rng
        if depth <= 0 or r.random() < 0.3:
            return self.atom(QSH_KINDS, scope)
        ops = ["and", "or", "star"]
        free_bound = [b for b in self.bound if b not in scope]
        if free_bound:
            ops.append("exists")
        if wands:
            ops.append("wand")
        op = r.choice(ops)
        if op == "exists":
            v = r.choice(free_bound)
            return Exists(v, self.sl(depth - 1, wands, scope + (v,)))
        if op == "wand":
            return Wand(self.pto(scope), self.sl(depth - 1, wands, scope))
        cls = {"and": And, "or": Or, "star": Star}[op]
        return cls(self.sl(depth - 1, wands, scope), self.sl(depth - 1, wands, scope))

    # programs --------------------------------------------------------------

    def base_statement(self, kind: str, target: str = "x") -> Program:
        """One heap or assignment statement of the given kind."""
        if kind == "assign":
            return Assign(target, self.term())
        if kind == "alloc":
            return Alloc(target, tuple(self.term() for _ in range(self.domain.k)))
        if kind == "free":
            return Free(self.term())
        if kind == "lookup":
            return Lookup(target, self.term())
        if kind == "mutate":
            return Mutate(self.term(), tuple(self.term() for _ in range(self.domain.k)))
        raise ValueError(f"unknown statement kind {kind!r}")


BASE_STATEMENTS = ("assign", "alloc", "free", "lookup", "mutate")


def alphas(f: QslFormula, rng: random.Random, evalset_members: Sequence[Fraction]) -> Fraction:
    """Either an evalset member or a random rational strictly between two."""
    if rng.random() < 0.7 or len(evalset_members) < 2:
        return rng.choice(list(evalset_members))
    i = rng.randrange(len(evalset_members) - 1)
    lo, hi = evalset_members[i], evalset_members[i + 1]
    return (lo + hi) / 2
