"""Qualitative "at least alpha" formulas for QSL expectations.

``atleast(alpha, f)`` is an SL formula satisfied exactly by the states in
which ``f`` evaluates to at least ``alpha``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable

from qslcheck.evalset import evalset
from qslcheck.semantics import DEFAULT_DOMAIN, Domain, State, _prepare, _state_of, stack_tuples
from qslcheck.syntax import (
    TRUE,
    And,
    Atom,
    BoolChoice,
    ConvexSum,
    Exists,
    Forall,
    GuardedWand,
    InfQuant,
    Iverson,
    Max,
    Min,
    Mul,
    Not,
    OneMinus,
    Or,
    QStar,
    QslFormula,
    SlFormula,
    Star,
    SupQuant,
    Wand,
    complement,
    free_vars,
    map_children,
    psize,
    qsl_size,
    sl_size,
)


def _is_true(a: SlFormula) -> bool:
    return a == TRUE


def atleast(alpha, f: QslFormula, *, true_elim: bool = True) -> SlFormula:
    """SL formula for ``alpha <= f``; ``alpha`` any rational in [0, 1].

    With ``true_elim`` the trivial bound ``0 <= g`` is never spelled out:
    such conjuncts are dropped and ``atleast(0, f)`` is ``true``.
    """
    a = Fraction(alpha)
    if not 0 <= a <= 1:
        raise ValueError(f"alpha = {a} outside [0, 1]")
    return _Builder(true_elim).build(a, f)


class _Builder:
    def __init__(self, true_elim: bool):
        self.elim = true_elim
        self.memo: dict = {}
        self.es_memo: dict = {}

    def es(self, f):
        return evalset(f, self.es_memo)

    def conj(self, a: SlFormula, b: SlFormula) -> SlFormula:
        if self.elim:
            if _is_true(a):
                return b
            if _is_true(b):
                return a
        return And(a, b)

    def disj(self, items: list[SlFormula]) -> SlFormula:
        if self.elim and any(_is_true(x) for x in items):
            return TRUE
        acc = items[0]
        for x in items[1:]:
            acc = Or(acc, x)
        return acc

    def pairs(self, f, test: Callable[[Fraction, Fraction], bool]):
        for b in self.es(f.left):
            for c in self.es(f.right):
                if test(b, c):
                    yield b, c

    def build(self, a: Fraction, f: QslFormula) -> SlFormula:
        key = (a, id(f))
        hit = self.memo.get(key)
        if hit is not None:
            return hit[1]
        out = self._build(a, f)
        self.memo[key] = (f, out)
        return out

    def _build(self, a: Fraction, f: QslFormula) -> SlFormula:
        if self.elim and a == 0:
            return TRUE
        if isinstance(f, Iverson):
            return TRUE if a == 0 else f.atom
        if isinstance(f, BoolChoice):
            b = f.guard
            return Or(
                self.conj(b, self.build(a, f.then)),
                self.conj(complement(b), self.build(a, f.other)),
            )
        if isinstance(f, ConvexSum):
            p, q = f.p, 1 - f.p
            ds = [
                self.conj(self.build(b, f.left), self.build(c, f.right))
                for b, c in self.pairs(f, lambda b, c: p * b + q * c >= a)
            ]
            return self.disj(ds)
        if isinstance(f, Mul):
            ds = [
                self.conj(self.build(b, f.left), self.build(c, f.right))
                for b, c in self.pairs(f, lambda b, c: b * c >= a)
            ]
            return self.disj(ds)
        if isinstance(f, QStar):
            ds = [
                Star(self.build(b, f.left), self.build(c, f.right))
                for b, c in self.pairs(f, lambda b, c: b * c >= a)
            ]
            return self.disj(ds)
        if isinstance(f, OneMinus):
            if a == 0:
                return TRUE
            delta = self.es(f.arg).successor(1 - a)
            return Not(self.build(delta, f.arg))
        if isinstance(f, Max):
            return Or(self.build(a, f.left), self.build(a, f.right))
        if isinstance(f, Min):
            return And(self.build(a, f.left), self.build(a, f.right))
        if isinstance(f, SupQuant):
            return Exists(f.var, self.build(a, f.body))
        if isinstance(f, InfQuant):
            return Forall(f.var, self.build(a, f.body))
        if isinstance(f, GuardedWand):
            return Wand(f.guard, self.build(a, f.body))
        raise TypeError(f"not a QSL formula: {f!r}")


def eliminate_true(a: SlFormula) -> SlFormula:
    """Simplify away literal ``true`` where that preserves meaning.

    ``true & x`` becomes ``x``, ``true | x``, ``Ex: true``, ``Ax: true`` and
    ``x -* true`` become ``true``, and ``true * true`` becomes ``true``.
    ``true * x`` is kept: it is not equivalent to ``x``.
    """
    a = map_children(a, eliminate_true)
    if isinstance(a, And):
        if _is_true(a.left):
            return a.right
        if _is_true(a.right):
            return a.left
    elif isinstance(a, Or):
        if _is_true(a.left) or _is_true(a.right):
            return TRUE
    elif isinstance(a, Star):
        if _is_true(a.left) and _is_true(a.right):
            return TRUE
    elif isinstance(a, (Exists, Forall)):
        if _is_true(a.body):
            return TRUE
    elif isinstance(a, Wand):
        if _is_true(a.right):
            return TRUE
    return a


def contains_true(a: SlFormula) -> bool:
    from qslcheck.syntax import walk

    return any(n == TRUE for n in walk(a))


def size_bound(f: QslFormula) -> int:
    """``3 |f| 2^((psize(f)+1)^2)``."""
    return 3 * qsl_size(f) * 2 ** ((psize(f) + 1) ** 2)


def check_size_bound(f: QslFormula, a: SlFormula) -> bool:
    return sl_size(a) <= size_bound(f)


def correctness_check(alpha, f: QslFormula, domain: Domain = DEFAULT_DOMAIN,
                      formula: SlFormula | None = None) -> State | None:
    """First state where ``atleast(alpha, f)`` and ``alpha <= f`` disagree."""
    alpha = Fraction(alpha)
    a = atleast(alpha, f) if formula is None else formula
    comp = _prepare([a, f], domain)
    names = sorted(free_vars(a) | free_vars(f))
    fa, ff = comp.compile(a), comp.compile(f)
    for st in stack_tuples(comp, names):
        for h in range(len(comp.space)):
            if bool(fa(st, h)) != (ff(st, h) >= alpha):
                return _state_of(comp, names, st, h)
    return None
