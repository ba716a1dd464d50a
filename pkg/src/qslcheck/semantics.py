"""Bounded-domain semantics of SL and QSL, and the enumeration oracle.

Heaps are interned: a :class:`HeapSpace` lists every heap of a domain once,
and precomputes for each heap its two-way partitions and its disjoint
extensions that respect the cell bound.  Formulas are compiled into
closures over ``(stack, heap_index)`` where ``stack`` is a tuple aligned
with a fixed variable order.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from qslcheck.errors import DomainError
from qslcheck.syntax import (
    And,
    Atom,
    BoolChoice,
    ConvexSum,
    Exists,
    Forall,
    GuardedWand,
    InfQuant,
    Iverson,
    Lit,
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
    Var,
    Wand,
    all_vars,
    free_vars,
    literals,
)

Cell = tuple[int, tuple[int, ...]]
HeapKey = tuple[Cell, ...]


@dataclass(frozen=True)
class Domain:
    """A finite universe: values, allocatable locations, heap size and width."""

    values: tuple[int, ...] = (0, 1, 2, 3)
    locations: tuple[int, ...] = (1, 2, 3)
    max_heap_cells: int = 3
    k: int = 1

    def __post_init__(self) -> None:
        vals = tuple(sorted(set(self.values)))
        locs = tuple(sorted(set(self.locations)))
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "locations", locs)
        if not vals:
            raise DomainError("the value set must be non-empty")
        if not set(locs) <= set(vals):
            raise DomainError("locations must be a subset of the values")
        if self.max_heap_cells < 0:
            raise DomainError("max_heap_cells must be non-negative")
        if self.k < 1:
            raise DomainError("record width k must be at least 1")

    def to_json(self) -> dict:
        return {
            "values": list(self.values),
            "locations": list(self.locations),
            "max_heap_cells": self.max_heap_cells,
            "k": self.k,
        }


DEFAULT_DOMAIN = Domain()


class HeapSpace:
    """All heaps of a domain, with partition and extension tables."""

    def __init__(self, domain: Domain):
        self.domain = domain
        locs = domain.locations
        records = list(itertools.product(domain.values, repeat=domain.k))
        heaps: list[HeapKey] = []
        by_mask: dict[int, list[int]] = {}
        masks: list[int] = []
        for size in range(0, min(domain.max_heap_cells, len(locs)) + 1):
            for dom in itertools.combinations(range(len(locs)), size):
                mask = sum(1 << i for i in dom)
                for recs in itertools.product(records, repeat=size):
                    key = tuple((locs[i], r) for i, r in zip(dom, recs))
                    by_mask.setdefault(mask, []).append(len(heaps))
                    masks.append(mask)
                    heaps.append(key)
        self.heaps = heaps
        self.masks = masks
        self.index = {h: i for i, h in enumerate(heaps)}
        self.dicts = [dict(h) for h in heaps]
        self.sizes = [len(h) for h in heaps]
        self.single = {h[0]: i for i, h in enumerate(heaps) if len(h) == 1}
        self.empty = self.index[()]
        self._by_mask = by_mask
        self._splits: dict[int, list[tuple[int, int]]] = {}
        self._ext: dict[int, list[tuple[int, int]]] = {}
        self._ext_map: dict[int, dict[int, int]] = {}

    def __len__(self) -> int:
        return len(self.heaps)

    def splits(self, h: int) -> list[tuple[int, int]]:
        """All ``(h1, h2)`` with ``h1 * h2 = h``."""
        out = self._splits.get(h)
        if out is None:
            cells = self.heaps[h]
            n = len(cells)
            out = []
            for m in range(1 << n):
                left = tuple(cells[i] for i in range(n) if m >> i & 1)
                right = tuple(cells[i] for i in range(n) if not m >> i & 1)
                out.append((self.index[left], self.index[right]))
            self._splits[h] = out
        return out

    def extensions(self, h: int) -> list[tuple[int, int]]:
        """All ``(h', h * h')`` with ``h'`` disjoint and the union in bounds."""
        out = self._ext.get(h)
        if out is None:
            mask = self.masks[h]
            room = self.domain.max_heap_cells - self.sizes[h]
            out = []
            cells = self.heaps[h]
            for m2, members in self._by_mask.items():
                if m2 & mask or bin(m2).count("1") > room:
                    continue
                for e in members:
                    union = tuple(sorted(cells + self.heaps[e]))
                    out.append((e, self.index[union]))
            out.sort()
            self._ext[h] = out
            self._ext_map[h] = dict(out)
        return out

    def extend_with(self, h: int, e: int) -> int | None:
        """Index of ``h * e`` or None when not disjoint or out of bounds."""
        if h not in self._ext_map:
            self.extensions(h)
        return self._ext_map[h].get(e)

    def heap_index(self, heap: Mapping[int, "int | Sequence[int]"]) -> int:
        cells = []
        for loc, rec in heap.items():
            rec = (rec,) if isinstance(rec, int) else tuple(rec)
            cells.append((int(loc), rec))
        key = tuple(sorted(cells))
        if key not in self.index:
            raise DomainError(f"heap {dict(heap)} is outside the domain")
        return self.index[key]


@functools.lru_cache(maxsize=16)
def heap_space(domain: Domain) -> HeapSpace:
    return HeapSpace(domain)


@dataclass(frozen=True)
class State:
    stack: dict[str, int]
    heap: dict[int, tuple[int, ...]]

    def to_json(self) -> dict:
        return {
            "stack": dict(sorted(self.stack.items())),
            "heap": {str(k): list(v) for k, v in sorted(self.heap.items())},
        }


# ---------------------------------------------------------------------------
# Compilation


Fn = Callable[[tuple, int], object]


class Compiler:
    """Turns formulas into closures over a fixed variable order."""

    def __init__(self, domain: Domain, var_order: Sequence[str]):
        self.domain = domain
        self.space = heap_space(domain)
        self.var_order = tuple(var_order)
        self.pos = {v: i for i, v in enumerate(self.var_order)}
        self._cache: dict[int, Fn] = {}
        self._keep: list = []

    # -- helpers
    def _getter(self, t):
        if isinstance(t, Lit):
            v = t.value
            return lambda st: v
        i = self.pos[t.name]
        return lambda st: st[i]

    def _memo(self, node, fn: Fn) -> Fn:
        idx = tuple(self.pos[v] for v in sorted(free_vars(node)))
        cache: dict = {}
        if not idx:
            def wrapped(st, h):
                r = cache.get(h)
                if r is None:
                    r = cache[h] = fn(st, h)
                return r
        elif len(idx) == 1:
            (i,) = idx

            def wrapped(st, h):
                key = (h, st[i])
                r = cache.get(key)
                if r is None:
                    r = cache[key] = fn(st, h)
                return r
        else:
            def wrapped(st, h):
                key = (h,) + tuple([st[i] for i in idx])
                r = cache.get(key)
                if r is None:
                    r = cache[key] = fn(st, h)
                return r
        return wrapped

    def _bind(self, var: str):
        i = self.pos[var]
        values = self.domain.values

        def each(st):
            head, tail = st[:i], st[i + 1:]
            for v in values:
                yield head + (v,) + tail

        return each

    def compile(self, node) -> Fn:
        fn = self._cache.get(id(node))
        if fn is None:
            fn = self._compile_sl(node) if isinstance(node, SlFormula) else self._compile_qsl(node)
            self._cache[id(node)] = fn
            self._keep.append(node)
        return fn

    # -- atoms
    def atom(self, a: Atom) -> Callable[[tuple, int], bool]:
        sp = self.space
        empty = sp.empty
        kind = a.kind
        if kind == "true":
            return lambda st, h: True
        if kind == "false":
            return lambda st, h: False
        if kind == "emp":
            return lambda st, h: h == empty
        if kind in ("eq", "neq", "eq_emp", "neq_emp"):
            ga, gb = (self._getter(t) for t in a.args)
            if kind == "eq":
                return lambda st, h: ga(st) == gb(st)
            if kind == "neq":
                return lambda st, h: ga(st) != gb(st)
            if kind == "eq_emp":
                return lambda st, h: h == empty and ga(st) == gb(st)
            return lambda st, h: h == empty and ga(st) != gb(st)
        if kind == "pto":
            gx = self._getter(a.args[0])
            gvals = [self._getter(t) for t in a.args[1:]]
            single = sp.single
            if len(gvals) == 1:
                gv = gvals[0]
                return lambda st, h: single.get((gx(st), (gv(st),))) == h
            return lambda st, h: single.get((gx(st), tuple([g(st) for g in gvals]))) == h
        if kind == "ls":
            ga, gb = (self._getter(t) for t in a.args)
            dicts = sp.dicts

            def holds(st, h):
                rest = dict(dicts[h])
                cur, end = ga(st), gb(st)
                while rest:
                    rec = rest.pop(cur, None)
                    if rec is None:
                        return False
                    cur = rec[0]
                return cur == end

            return holds
        raise DomainError(f"no semantics for atom {kind}")

    def pto_cell(self, a: Atom, st) -> int | None:
        """Heap index of the single cell described by a points-to atom."""
        if a.kind != "pto":
            return None
        vals = tuple(self._getter(t)(st) for t in a.args[1:])
        return self.space.single.get((self._getter(a.args[0])(st), vals))

    # -- SL
    def _compile_sl(self, a: SlFormula) -> Fn:
        sp = self.space
        if isinstance(a, Atom):
            return self.atom(a)
        if isinstance(a, Not):
            g = self.compile(a.arg)
            return lambda st, h: not g(st, h)
        if isinstance(a, And):
            l, r = self.compile(a.left), self.compile(a.right)
            return lambda st, h: l(st, h) and r(st, h)
        if isinstance(a, Or):
            l, r = self.compile(a.left), self.compile(a.right)
            return lambda st, h: l(st, h) or r(st, h)
        if isinstance(a, (Exists, Forall)):
            body = self.compile(a.body)
            each = self._bind(a.var)
            if isinstance(a, Exists):
                fn = lambda st, h: any(body(s2, h) for s2 in each(st))
            else:
                fn = lambda st, h: all(body(s2, h) for s2 in each(st))
            return self._memo(a, fn)
        if isinstance(a, Star):
            l, r = self.compile(a.left), self.compile(a.right)
            splits = sp.splits

            def star(st, h):
                for h1, h2 in splits(h):
                    if l(st, h1) and r(st, h2):
                        return True
                return False

            return self._memo(a, star)
        if isinstance(a, Wand):
            r = self.compile(a.right)
            if isinstance(a.left, Atom) and a.left.kind == "pto":
                ant = a.left

                def pwand(st, h):
                    e = self.pto_cell(ant, st)
                    if e is None:
                        return True
                    u = sp.extend_with(h, e)
                    return True if u is None else r(st, u)

                return self._memo(a, pwand)
            l = self.compile(a.left)

            def wand(st, h):
                for e, u in sp.extensions(h):
                    if l(st, e) and not r(st, u):
                        return False
                return True

            return self._memo(a, wand)
        raise TypeError(f"not an SL formula: {a!r}")

    # -- QSL
    def _compile_qsl(self, f: QslFormula) -> Fn:
        sp = self.space
        if isinstance(f, Iverson):
            b = self.atom(f.atom)
            return lambda st, h: 1 if b(st, h) else 0
        if isinstance(f, BoolChoice):
            b = self.atom(f.guard)
            g, u = self.compile(f.then), self.compile(f.other)
            return lambda st, h: g(st, h) if b(st, h) else u(st, h)
        if isinstance(f, ConvexSum):
            p, q = f.p, 1 - f.p
            g, u = self.compile(f.left), self.compile(f.right)
            fn = lambda st, h: p * g(st, h) + q * u(st, h)
            return self._memo(f, fn)
        if isinstance(f, Mul):
            g, u = self.compile(f.left), self.compile(f.right)

            def mul(st, h):
                x = g(st, h)
                return 0 if x == 0 else x * u(st, h)

            return mul
        if isinstance(f, OneMinus):
            g = self.compile(f.arg)
            return lambda st, h: 1 - g(st, h)
        if isinstance(f, Max):
            g, u = self.compile(f.left), self.compile(f.right)
            return lambda st, h: max(g(st, h), u(st, h))
        if isinstance(f, Min):
            g, u = self.compile(f.left), self.compile(f.right)
            return lambda st, h: min(g(st, h), u(st, h))
        if isinstance(f, SupQuant):
            body = self.compile(f.body)
            each = self._bind(f.var)

            def sup(st, h):
                best = 0
                for s2 in each(st):
                    v = body(s2, h)
                    if v > best:
                        best = v
                        if best == 1:
                            break
                return best

            return self._memo(f, sup)
        if isinstance(f, InfQuant):
            body = self.compile(f.body)
            each = self._bind(f.var)

            def inf(st, h):
                best = 1
                for s2 in each(st):
                    v = body(s2, h)
                    if v < best:
                        best = v
                        if best == 0:
                            break
                return best

            return self._memo(f, inf)
        if isinstance(f, QStar):
            g, u = self.compile(f.left), self.compile(f.right)
            splits = sp.splits

            def qstar(st, h):
                best = 0
                for h1, h2 in splits(h):
                    x = g(st, h1)
                    if x == 0 or x <= best:
                        continue
                    v = x * u(st, h2)
                    if v > best:
                        best = v
                        if best == 1:
                            break
                return best

            return self._memo(f, qstar)
        if isinstance(f, GuardedWand):
            body = self.compile(f.body)
            ant = f.guard
            if ant.kind == "pto":

                def pwand(st, h):
                    e = self.pto_cell(ant, st)
                    if e is None:
                        return 1
                    u = sp.extend_with(h, e)
                    return 1 if u is None else body(st, u)

                return self._memo(f, pwand)
            b = self.atom(ant)

            def gwand(st, h):
                best = 1
                for e, u in sp.extensions(h):
                    if b(st, e):
                        v = body(st, u)
                        if v < best:
                            best = v
                            if best == 0:
                                break
                return best

            return self._memo(f, gwand)
        raise TypeError(f"not a QSL formula: {f!r}")


# ---------------------------------------------------------------------------
# Public evaluation API


def _check_literals(formulas: Iterable, domain: Domain) -> None:
    for f in formulas:
        bad = literals(f) - set(domain.values)
        if bad:
            raise DomainError(f"literals {sorted(bad)} are not in the value domain")


def _prepare(formulas: Sequence, domain: Domain, extra: Iterable[str] = ()):
    _check_literals(formulas, domain)
    names: set[str] = set(extra)
    for f in formulas:
        names |= all_vars(f)
    order = sorted(names)
    return Compiler(domain, order)


def _stack_tuple(comp: Compiler, stack: Mapping[str, int]) -> tuple:
    default = comp.domain.values[0]
    out = []
    for v in comp.var_order:
        val = stack.get(v, default)
        if val not in comp.domain.values:
            raise DomainError(f"stack value {v}={val} is outside the domain")
        out.append(val)
    return tuple(out)


def eval_sl(stack: Mapping[str, int], heap: Mapping, a: SlFormula,
            domain: Domain = DEFAULT_DOMAIN) -> bool:
    """Does ``(stack, heap)`` satisfy ``a``?"""
    comp = _prepare([a], domain, stack)
    missing = free_vars(a) - set(stack)
    if missing:
        raise DomainError(f"stack does not define {sorted(missing)}")
    return bool(comp.compile(a)(_stack_tuple(comp, stack), comp.space.heap_index(heap)))


def eval_qsl(stack: Mapping[str, int], heap: Mapping, f: QslFormula,
             domain: Domain = DEFAULT_DOMAIN) -> Fraction:
    """The value of ``f`` in ``(stack, heap)``."""
    comp = _prepare([f], domain, stack)
    missing = free_vars(f) - set(stack)
    if missing:
        raise DomainError(f"stack does not define {sorted(missing)}")
    return Fraction(comp.compile(f)(_stack_tuple(comp, stack), comp.space.heap_index(heap)))


def stack_tuples(comp: Compiler, names: Sequence[str]) -> Iterator[tuple]:
    """Stacks over ``names`` (lexicographic), other positions defaulted."""
    names = sorted(names)
    default = comp.domain.values[0]
    base = [default] * len(comp.var_order)
    idx = [comp.pos[n] for n in names]
    for combo in itertools.product(comp.domain.values, repeat=len(idx)):
        st = list(base)
        for i, v in zip(idx, combo):
            st[i] = v
        yield tuple(st)


def enumerate_states(names: Iterable[str], domain: Domain = DEFAULT_DOMAIN) -> Iterator[State]:
    """Every state over ``names``: stacks lexicographically, then heaps."""
    names = sorted(set(names))
    sp = heap_space(domain)
    for combo in itertools.product(domain.values, repeat=len(names)):
        stack = dict(zip(names, combo))
        for h in sp.heaps:
            yield State(dict(stack), dict(h))


def count_states(names: Iterable[str], domain: Domain = DEFAULT_DOMAIN) -> int:
    return len(domain.values) ** len(set(names)) * len(heap_space(domain))


@dataclass(frozen=True)
class Verdict:
    """Outcome of an entailment check."""

    status: str  # "entails" | "fails" | "unknown" | "error"
    counterexample: State | None = None
    reason: str | None = None
    lhs_value: Fraction | None = None
    rhs_value: Fraction | None = None

    @property
    def entails(self) -> bool:
        return self.status == "entails"

    def to_json(self) -> dict:
        out: dict = {"result": self.status}
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample.to_json()
        if self.reason:
            out["reason"] = self.reason
        return out


ENTAILS = Verdict("entails")


def _state_of(comp: Compiler, names: Sequence[str], st: tuple, h: int) -> State:
    stack = {n: st[comp.pos[n]] for n in sorted(names)}
    return State(stack, dict(comp.space.heaps[h]))


def entails_oracle(lhs, rhs, domain: Domain = DEFAULT_DOMAIN) -> Verdict:
    """Bounded check of ``lhs |= rhs`` for SL or QSL formulas.

    For SL this is implication in every state; for QSL it is the pointwise
    order.  The first violating state in enumeration order is reported.
    """
    comp = _prepare([lhs, rhs], domain)
    names = sorted(free_vars(lhs) | free_vars(rhs))
    lf, rf = comp.compile(lhs), comp.compile(rhs)
    heaps = range(len(comp.space))
    for st in stack_tuples(comp, names):
        for h in heaps:
            lv = lf(st, h)
            if not lv:
                continue
            rv = rf(st, h)
            if lv > rv:
                return Verdict(
                    "fails",
                    _state_of(comp, names, st, h),
                    lhs_value=Fraction(lv),
                    rhs_value=Fraction(rv),
                )
    return ENTAILS


def equivalent(a, b, domain: Domain = DEFAULT_DOMAIN) -> State | None:
    """First state where ``a`` and ``b`` differ, or None."""
    comp = _prepare([a, b], domain)
    names = sorted(free_vars(a) | free_vars(b))
    fa, fb = comp.compile(a), comp.compile(b)
    for st in stack_tuples(comp, names):
        for h in range(len(comp.space)):
            if fa(st, h) != fb(st, h):
                return _state_of(comp, names, st, h)
    return None


def table(f, domain: Domain = DEFAULT_DOMAIN, names: Iterable[str] | None = None) -> list:
    """Values of ``f`` over every state, in enumeration order."""
    comp = _prepare([f], domain, names or ())
    names = sorted(set(names) if names is not None else free_vars(f))
    fn = comp.compile(f)
    return [fn(st, h) for st in stack_tuples(comp, names) for h in range(len(comp.space))]
