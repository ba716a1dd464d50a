"""Weakest liberal pre-expectations of loop-free heap programs.

:func:`wlp` follows the standard rules and introduces quantitative wands
for allocation, lookup and mutation.  :func:`wlp_nowand` computes a
wand-free lower bound (often exact) by working on a separated normal form

    S v1 ... vn: [b1] . ... . [bm] . (c1 * ... * ck)

and matching points-to cells against the statement, then simplifying with
the one-point rule ``S v: [v = t] . g  ==  g[v/t]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

from qslcheck.errors import LoopError, NonPureGuard
from qslcheck.semantics import DEFAULT_DOMAIN, Compiler, Domain, State, _prepare, _state_of, stack_tuples
from qslcheck.syntax import (
    EMP,
    FALSE,
    Alloc,
    Assign,
    Atom,
    BoolChoice,
    ConvexSum,
    Free,
    GuardedWand,
    InfQuant,
    Ite,
    Iverson,
    Lit,
    Lookup,
    Max,
    Min,
    Mul,
    Mutate,
    PChoice,
    Program,
    QStar,
    QslFormula,
    Seq,
    Skip,
    SupQuant,
    Var,
    While,
    ZERO,
    all_vars,
    complement,
    fresh_name,
    free_vars,
    modified_vars,
    program_vars,
    pto,
    subst,
    subst_atom,
    subst_many,
    term_vars,
    walk_program,
)


# ---------------------------------------------------------------------------
# Standard wlp


def wlp(c: Program, f: QslFormula, *, k: int = 1) -> QslFormula:
    """``wlp(c, f)``; raises :class:`LoopError` on a while loop.

    ``k`` is the record width; lookup reads the first field.
    """
    return _wlp(c, f, set(program_vars(c)), k)


def _fresh(base: str, f: QslFormula, avoid: set[str], extra: Iterable[str] = ()) -> str:
    name = fresh_name(base, avoid | all_vars(f) | set(extra))
    avoid.add(name)
    return name


def _fresh_many(base: str, n: int, f, avoid: set[str], extra=()) -> list[str]:
    return [_fresh(base, f, avoid, extra) for _ in range(n)]


def _wlp(c: Program, f: QslFormula, avoid: set[str], k: int) -> QslFormula:
    if isinstance(c, Skip):
        return f
    if isinstance(c, Assign):
        return subst(f, c.var, c.expr)
    if isinstance(c, Alloc):
        ex = set().union(*(term_vars(t) for t in c.exprs))
        y = _fresh(c.var, f, avoid, ex)
        return InfQuant(y, GuardedWand(pto(Var(y), *c.exprs), subst(f, c.var, Var(y))))
    if isinstance(c, Free):
        vs = _fresh_many("v", k, f, avoid, term_vars(c.expr))
        body = QStar(Iverson(pto(c.expr, *map(Var, vs))), f)
        return _sups(vs, body)
    if isinstance(c, Lookup):
        ys = _fresh_many(c.var, k, f, avoid, term_vars(c.expr))
        cell = pto(c.expr, *map(Var, ys))
        body = QStar(Iverson(cell), GuardedWand(cell, subst(f, c.var, Var(ys[0]))))
        return _sups(ys, body)
    if isinstance(c, Mutate):
        ex = set(term_vars(c.expr)).union(*(term_vars(t) for t in c.values))
        vs = _fresh_many("v", len(c.values), f, avoid, ex)
        valid = _sups(vs, Iverson(pto(c.expr, *map(Var, vs))))
        return QStar(valid, GuardedWand(pto(c.expr, *c.values), f))
    if isinstance(c, Seq):
        return _wlp(c.first, _wlp(c.second, f, avoid, k), avoid, k)
    if isinstance(c, PChoice):
        return ConvexSum(c.p, _wlp(c.left, f, avoid, k), _wlp(c.right, f, avoid, k))
    if isinstance(c, Ite):
        return BoolChoice(c.guard, _wlp(c.then, f, avoid, k), _wlp(c.other, f, avoid, k))
    if isinstance(c, While):
        raise LoopError("wlp of a while loop needs an invariant; use invariant_check")
    raise TypeError(f"not a program: {c!r}")


def _sups(vs: list[str], body: QslFormula) -> QslFormula:
    for v in reversed(vs):
        body = SupQuant(v, body)
    return body


# ---------------------------------------------------------------------------
# Wand-free lower bounds


@dataclass
class _NF:
    sups: list[str] = field(default_factory=list)
    pures: list[Atom] = field(default_factory=list)
    cells: list[QslFormula] = field(default_factory=list)

    def formula(self) -> QslFormula:
        return _from_nf(self)


def _flatten(f: QslFormula, avoid: set[str], nf: _NF) -> None:
    if isinstance(f, SupQuant):
        v, body = f.var, f.body
        if v in avoid:
            new = fresh_name(v, avoid | all_vars(f))
            body, v = subst(body, v, Var(new)), new
        avoid.add(v)
        nf.sups.append(v)
        _flatten(body, avoid, nf)
    elif isinstance(f, QStar):
        _flatten(f.left, avoid, nf)
        _flatten(f.right, avoid, nf)
    elif isinstance(f, BoolChoice) and f.other == ZERO:
        nf.pures.append(f.guard)
        _flatten(f.then, avoid, nf)
    elif isinstance(f, Mul) and isinstance(f.left, Iverson) and f.left.atom.pure:
        nf.pures.append(f.left.atom)
        _flatten(f.right, avoid, nf)
    elif isinstance(f, Mul) and isinstance(f.right, Iverson) and f.right.atom.pure:
        nf.pures.append(f.right.atom)
        _flatten(f.left, avoid, nf)
    elif isinstance(f, Iverson) and f.atom.kind in ("eq_emp", "neq_emp"):
        kind = "eq" if f.atom.kind == "eq_emp" else "neq"
        nf.pures.append(Atom(kind, f.atom.args))
    elif isinstance(f, Iverson) and f.atom.kind == "emp":
        pass
    else:
        nf.cells.append(f)


def _to_nf(f: QslFormula, avoid: set[str]) -> _NF:
    nf = _NF()
    _flatten(f, set(avoid) | free_vars(f), nf)
    return nf


def _subst_nf(nf: _NF, mapping: dict) -> _NF:
    return _NF(
        list(nf.sups),
        [subst_atom(b, mapping) for b in nf.pures],
        [subst_many(c, mapping) for c in nf.cells],
    )


def _trivial(b: Atom) -> bool | None:
    """True/False when a pure atom is decided syntactically, else None."""
    if b.kind == "true":
        return True
    if b.kind == "false":
        return False
    x, y = b.args
    if x == y:
        return b.kind == "eq"
    if isinstance(x, Lit) and isinstance(y, Lit):
        return b.kind == "neq"
    return None


def _simplify(nf: _NF) -> _NF | None:
    """One-point elimination and trivial-guard removal; None means zero."""
    changed = True
    while changed:
        changed = False
        keep: list[Atom] = []
        for b in nf.pures:
            t = _trivial(b)
            if t is False:
                return None
            if t is True:
                changed = True
                continue
            keep.append(b)
        nf = _NF(nf.sups, keep, nf.cells)
        for i, b in enumerate(nf.pures):
            if b.kind != "eq":
                continue
            x, y = b.args
            for v, t in ((x, y), (y, x)):
                if isinstance(v, Var) and v.name in nf.sups and v != t:
                    rest = _NF(
                        [s for s in nf.sups if s != v.name],
                        nf.pures[:i] + nf.pures[i + 1:],
                        nf.cells,
                    )
                    nf = _subst_nf(rest, {v.name: t})
                    changed = True
                    break
            if changed:
                break
    used = set()
    for b in nf.pures:
        used |= free_vars(b)
    for c in nf.cells:
        used |= free_vars(c)
    return _NF([s for s in nf.sups if s in used], nf.pures, nf.cells)


def _from_nf(nf: _NF | None) -> QslFormula:
    if nf is None:
        return ZERO
    if nf.cells:
        body = nf.cells[0]
        for c in nf.cells[1:]:
            body = QStar(body, c)
    else:
        body = Iverson(EMP)
    for b in reversed(nf.pures):
        body = BoolChoice(b, body, ZERO)
    return _sups(nf.sups, body)


def _cell_at(nf: _NF, addr) -> int | None:
    for i, c in enumerate(nf.cells):
        if isinstance(c, Iverson) and c.atom.kind == "pto" and c.atom.args[0] == addr:
            return i
    return None


def _mentions(nf: _NF, names: set[str], skip: int | None = None) -> bool:
    for b in nf.pures:
        if free_vars(b) & names:
            return True
    for i, c in enumerate(nf.cells):
        if i != skip and free_vars(c) & names:
            return True
    return False


def _match(c: Program, f: QslFormula, avoid: set[str], k: int) -> QslFormula | None:
    """Exact rewrite of ``wlp(c, f)`` on the separated normal form."""
    nf = _to_nf(f, avoid)
    fvs = set(avoid) | all_vars(f)
    if isinstance(c, Free):
        vs = []
        for _ in range(k):
            vs.append(fresh_name("v", fvs))
            fvs.add(vs[-1])
        cell = Iverson(pto(c.expr, *map(Var, vs)))
        return _from_nf(_simplify(_NF(nf.sups + vs, nf.pures, [cell] + nf.cells)))
    if isinstance(c, Mutate):
        i = _cell_at(nf, c.expr)
        if i is None:
            return None
        old = nf.cells[i].atom.args[1:]
        vs = []
        for _ in c.values:
            vs.append(fresh_name("v", fvs))
            fvs.add(vs[-1])
        pures = list(nf.pures)
        pures += [Atom("eq", (new, o)) for new, o in zip(c.values, old) if new != o]
        cells = list(nf.cells)
        cells[i] = Iverson(pto(c.expr, *map(Var, vs)))
        return _from_nf(_simplify(_NF(nf.sups + vs, pures, cells)))
    if isinstance(c, Lookup):
        x = c.var
        if x in term_vars(c.expr):
            return None
        i = _cell_at(nf, c.expr)
        if i is None:
            return None
        vs = []
        for _ in nf.cells[i].atom.args[1:]:
            vs.append(fresh_name(x, fvs))
            fvs.add(vs[-1])
        moved = _subst_nf(nf, {x: Var(vs[0])})
        fields = moved.cells[i].atom.args[1:]
        pures = moved.pures + [Atom("eq", (Var(v), t)) for v, t in zip(vs, fields)]
        cells = list(moved.cells)
        cells[i] = Iverson(pto(c.expr, *map(Var, vs)))
        return _from_nf(_simplify(_NF(moved.sups + vs, pures, cells)))
    if isinstance(c, Alloc):
        x = c.var
        i = _cell_at(nf, Var(x))
        if i is None:
            return None
        fields = nf.cells[i].atom.args[1:]
        if len(fields) != len(c.exprs):
            return None
        if any(x in term_vars(t) for t in fields) or _mentions(nf, {x}, skip=i):
            return None
        pures = nf.pures + [Atom("eq", (t, e)) for t, e in zip(fields, c.exprs)]
        cells = nf.cells[:i] + nf.cells[i + 1:]
        return _from_nf(_simplify(_NF(nf.sups, pures, cells)))
    return None


def _frame(c: Program, f: QslFormula, avoid: set[str], k: int) -> QslFormula | None:
    """``wlp(c, g) * R  |=  wlp(c, g * R)`` when ``R`` avoids ``mod(c)``."""
    nf = _to_nf(f, avoid)
    if len(nf.cells) < 2:
        return None
    mod = set(modified_vars(c))
    if any(free_vars(b) & mod for b in nf.pures):
        return None
    for i, cell in enumerate(nf.cells):
        rest = nf.cells[:i] + nf.cells[i + 1:]
        if any(free_vars(r) & mod for r in rest):
            continue
        inner = _nowand_base(c, cell, avoid | set(nf.sups), k)
        if inner is None:
            continue
        body = inner
        for r in rest:
            body = QStar(body, r)
        for b in reversed(nf.pures):
            body = BoolChoice(b, body, ZERO)
        return _sups(nf.sups, body)
    return None


def _distribute(c: Program, f: QslFormula, avoid: set[str], k: int) -> QslFormula | None:
    """Push a base statement through connectives where that is sound."""
    mod = set(modified_vars(c))
    rec = lambda g: _nowand_base(c, g, avoid, k)
    if isinstance(f, (ConvexSum, Max, Min, Mul)):
        l, r = rec(f.left), rec(f.right)
        if l is None or r is None:
            return None
        return ConvexSum(f.p, l, r) if isinstance(f, ConvexSum) else type(f)(l, r)
    if isinstance(f, BoolChoice):
        if free_vars(f.guard) & mod:
            return None
        l, r = rec(f.then), rec(f.other)
        if l is None or r is None:
            return None
        return BoolChoice(f.guard, l, r)
    if isinstance(f, (SupQuant, InfQuant)):
        v, body = f.var, f.body
        stmt_vars = program_vars(c)
        if v in stmt_vars or v in avoid:
            new = fresh_name(v, avoid | all_vars(f) | stmt_vars)
            body, v = subst(body, v, Var(new)), new
        inner = _nowand_base(c, body, avoid | {v}, k)
        return None if inner is None else type(f)(v, inner)
    return None


def _nowand_base(c: Program, f: QslFormula, avoid: set[str], k: int) -> QslFormula | None:
    if isinstance(c, Skip):
        return f
    if isinstance(c, Assign):
        return subst(f, c.var, c.expr)
    for step in (_match, _frame, _distribute):
        out = step(c, f, avoid, k)
        if out is not None:
            return out
    return None


def wlp_nowand(c: Program, f: QslFormula, *, k: int = 1) -> QslFormula | None:
    """A wand-free ``g`` with ``g |= wlp(c, f)``, or None if no rule applies.

    The result is exact for deterministic statements; for allocation it
    may be smaller when the bounded domain runs out of fresh locations.
    """
    return _nowand(c, f, set(program_vars(c)), k)


def _nowand(c: Program, f: QslFormula, avoid: set[str], k: int) -> QslFormula | None:
    if isinstance(c, Seq):
        mid = _nowand(c.second, f, avoid, k)
        return None if mid is None else _nowand(c.first, mid, avoid, k)
    if isinstance(c, PChoice):
        l, r = _nowand(c.left, f, avoid, k), _nowand(c.right, f, avoid, k)
        return None if l is None or r is None else ConvexSum(c.p, l, r)
    if isinstance(c, Ite):
        l, r = _nowand(c.then, f, avoid, k), _nowand(c.other, f, avoid, k)
        return None if l is None or r is None else BoolChoice(c.guard, l, r)
    if isinstance(c, While):
        raise LoopError("wlp of a while loop needs an invariant; use invariant_check")
    return _nowand_base(c, f, avoid, k)


# ---------------------------------------------------------------------------
# Loops


def invariant_check(inv: QslFormula, guard: Atom, body: Program,
                    post: QslFormula, *, k: int = 1) -> tuple[QslFormula, QslFormula]:
    """The obligation ``I |= [!b] . f + [b] . wlp(body, I)``."""
    if not guard.pure:
        raise NonPureGuard(f"loop guard {guard.kind} is not pure")
    return inv, BoolChoice(complement(guard), post, wlp(body, inv, k=k))


# ---------------------------------------------------------------------------
# Closure conditions


@dataclass(frozen=True)
class Registry:
    """Which atoms a fragment offers, and whether literals may appear."""

    name: str
    kinds: frozenset[str]
    allow_literals: bool = True
    k: int = 1


FULL_REGISTRY = Registry(
    "full",
    frozenset({"true", "false", "emp", "eq", "neq", "eq_emp", "neq_emp", "pto", "ls"}),
)
QSH_REGISTRY = Registry(
    "qsh",
    frozenset({"true", "false", "emp", "eq", "neq", "eq_emp", "neq_emp", "pto"}),
)


@dataclass(frozen=True)
class Violation:
    condition: int
    message: str


def check_closure(c: Program, registry: Registry = QSH_REGISTRY) -> list[Violation]:
    """Violations of the three closure conditions for ``c``.

    1. points-to atoms exist for every heap-accessing statement;
    2. every guard and its negation are atoms of the registry;
    3. atoms are closed under the substitutions made by assignments.
    """
    out: list[Violation] = []
    for node in walk_program(c):
        if isinstance(node, (Alloc, Free, Lookup, Mutate)):
            if "pto" not in registry.kinds:
                out.append(Violation(1, f"{type(node).__name__} needs points-to atoms"))
            width = len(node.exprs) if isinstance(node, Alloc) else (
                len(node.values) if isinstance(node, Mutate) else registry.k
            )
            if width != registry.k:
                out.append(Violation(1, f"record width {width} differs from k = {registry.k}"))
            terms = [node.expr] if not isinstance(node, Alloc) else []
            terms += list(getattr(node, "exprs", ())) + list(getattr(node, "values", ()))
            if not registry.allow_literals and any(isinstance(t, Lit) for t in terms):
                out.append(Violation(1, "points-to over literals is not in the registry"))
        if isinstance(node, (Ite, While)):
            g = node.guard
            comp = g.info.complement
            if g.kind not in registry.kinds:
                out.append(Violation(2, f"guard {g.kind} is not a registry atom"))
            elif comp is None or comp not in registry.kinds:
                out.append(Violation(2, f"negation of guard {g.kind} is not a registry atom"))
        if isinstance(node, Assign) and isinstance(node.expr, Lit) and not registry.allow_literals:
            out.append(Violation(3, f"assigning literal {node.expr} leaves the atom set"))
    return out


# ---------------------------------------------------------------------------
# Bounded operational semantics (the reference for wlp tests)


def _op(c: Program, post: Callable, st: tuple, h: int, comp: Compiler):
    sp = comp.space
    dom = comp.domain
    getter = comp._getter

    def setv(st, var, val):
        i = comp.pos[var]
        return st[:i] + (val,) + st[i + 1:]

    if isinstance(c, Skip):
        return post(st, h)
    if isinstance(c, Assign):
        return post(setv(st, c.var, getter(c.expr)(st)), h)
    if isinstance(c, Alloc):
        rec = tuple(getter(t)(st) for t in c.exprs)
        cells = sp.heaps[h]
        if len(cells) >= dom.max_heap_cells:
            return 1
        used = sp.dicts[h]
        best = 1
        for loc in dom.locations:
            if loc in used:
                continue
            h2 = sp.index[tuple(sorted(cells + ((loc, rec),)))]
            v = post(setv(st, c.var, loc), h2)
            best = min(best, v)
        return best
    if isinstance(c, (Free, Lookup, Mutate)):
        loc = getter(c.expr)(st)
        d = sp.dicts[h]
        if loc not in d:
            return 0
        if isinstance(c, Lookup):
            return post(setv(st, c.var, d[loc][0]), h)
        rest = tuple(cell for cell in sp.heaps[h] if cell[0] != loc)
        if isinstance(c, Free):
            return post(st, sp.index[rest])
        rec = tuple(getter(t)(st) for t in c.values)
        return post(st, sp.index[tuple(sorted(rest + ((loc, rec),)))])
    if isinstance(c, Seq):
        return _op(c.first, lambda s2, h2: _op(c.second, post, s2, h2, comp), st, h, comp)
    if isinstance(c, PChoice):
        return c.p * _op(c.left, post, st, h, comp) + (1 - c.p) * _op(c.right, post, st, h, comp)
    if isinstance(c, Ite):
        b = comp.atom(c.guard)
        return _op(c.then if b(st, h) else c.other, post, st, h, comp)
    raise LoopError("the operational reference handles loop-free programs only")


def operational_mismatch(c: Program, f: QslFormula, pre: QslFormula,
                         domain: Domain = DEFAULT_DOMAIN) -> State | None:
    """First state where ``pre`` differs from the operational wlp of ``c``."""
    comp = _prepare([f, pre], domain, program_vars(c))
    names = sorted(free_vars(pre) | free_vars(f) | program_vars(c))
    post, fpre = comp.compile(f), comp.compile(pre)
    for st in stack_tuples(comp, names):
        for h in range(len(comp.space)):
            if _op(c, post, st, h, comp) != fpre(st, h):
                return _state_of(comp, names, st, h)
    return None


def operational_value(c: Program, f: QslFormula, stack: dict, heap: dict,
                      domain: Domain = DEFAULT_DOMAIN) -> Fraction:
    from qslcheck.semantics import _stack_tuple

    comp = _prepare([f], domain, set(stack) | program_vars(c))
    return Fraction(_op(c, comp.compile(f), _stack_tuple(comp, stack),
                        comp.space.heap_index(heap), comp))
