"""Abstract syntax for terms, atoms, SL and QSL formulas, and heap programs.

Every node is an immutable dataclass, so formulas can be shared freely and
used as dictionary keys.  Binary connectives stay binary; n-ary helpers such
as :func:`disj` fold to the left.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Union

from qslcheck.errors import NonPureGuard, QslError


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Lit:
    value: int

    def __str__(self) -> str:
        return str(self.value)


Term = Union[Var, Lit]


def term(x: "Term | str | int") -> Term:
    """Coerce a name or an int into a term."""
    if isinstance(x, (Var, Lit)):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not terms")
    if isinstance(x, int):
        return Lit(x)
    if isinstance(x, str):
        return Var(x)
    raise TypeError(f"cannot build a term from {x!r}")


def term_vars(t: Term) -> frozenset[str]:
    return frozenset((t.name,)) if isinstance(t, Var) else frozenset()


# ---------------------------------------------------------------------------
# Atom registry


@dataclass(frozen=True)
class AtomKind:
    """Registry entry: arity (None means 1 + k), purity, size, complement."""

    name: str
    arity: int | None
    pure: bool
    size: int = 1
    complement: str | None = None


ATOM_KINDS: dict[str, AtomKind] = {
    k.name: k
    for k in (
        AtomKind("true", 0, True, complement="false"),
        AtomKind("false", 0, True, complement="true"),
        AtomKind("emp", 0, False),
        AtomKind("eq", 2, True, complement="neq"),
        AtomKind("neq", 2, True, complement="eq"),
        AtomKind("eq_emp", 2, False),
        AtomKind("neq_emp", 2, False),
        AtomKind("pto", None, False),
        AtomKind("ls", 2, False),
    )
}


# ---------------------------------------------------------------------------
# SL formulas


class SlFormula:
    """Base class of SL formulas."""

    __slots__ = ()


@dataclass(frozen=True)
class Atom(SlFormula):
    kind: str
    args: tuple[Term, ...] = ()

    def __post_init__(self) -> None:
        info = ATOM_KINDS.get(self.kind)
        if info is None:
            raise QslError(f"unknown atom kind {self.kind!r}")
        if info.arity is None:
            if len(self.args) < 2:
                raise QslError("points-to needs an address and at least one value")
        elif len(self.args) != info.arity:
            raise QslError(f"atom {self.kind} takes {info.arity} arguments")
        for a in self.args:
            if not isinstance(a, (Var, Lit)):
                raise TypeError(f"atom argument {a!r} is not a term")

    @property
    def info(self) -> AtomKind:
        return ATOM_KINDS[self.kind]

    @property
    def pure(self) -> bool:
        return ATOM_KINDS[self.kind].pure

    @property
    def size(self) -> int:
        return ATOM_KINDS[self.kind].size

    @property
    def width(self) -> int:
        """Record width of a points-to atom."""
        return len(self.args) - 1


@dataclass(frozen=True)
class Not(SlFormula):
    arg: SlFormula


@dataclass(frozen=True)
class And(SlFormula):
    left: SlFormula
    right: SlFormula


@dataclass(frozen=True)
class Or(SlFormula):
    left: SlFormula
    right: SlFormula


@dataclass(frozen=True)
class Exists(SlFormula):
    var: str
    body: SlFormula


@dataclass(frozen=True)
class Forall(SlFormula):
    var: str
    body: SlFormula


@dataclass(frozen=True)
class Star(SlFormula):
    left: SlFormula
    right: SlFormula


@dataclass(frozen=True)
class Wand(SlFormula):
    left: SlFormula
    right: SlFormula


TRUE = Atom("true")
FALSE = Atom("false")
EMP = Atom("emp")


def eq(a, b) -> Atom:
    return Atom("eq", (term(a), term(b)))


def neq(a, b) -> Atom:
    return Atom("neq", (term(a), term(b)))


def eq_emp(a, b) -> Atom:
    return Atom("eq_emp", (term(a), term(b)))


def neq_emp(a, b) -> Atom:
    return Atom("neq_emp", (term(a), term(b)))


def pto(x, *values) -> Atom:
    return Atom("pto", (term(x),) + tuple(term(v) for v in values))


def ls(a, b) -> Atom:
    return Atom("ls", (term(a), term(b)))


def complement(b: Atom) -> Atom:
    """The pure atom equivalent to the negation of the pure atom ``b``."""
    comp = b.info.complement
    if not b.pure or comp is None:
        raise NonPureGuard(f"atom {b.kind} has no pure complement")
    return Atom(comp, b.args)


def conj(items: Iterable[SlFormula]) -> SlFormula:
    return _fold(And, list(items), TRUE)


def disj(items: Iterable[SlFormula]) -> SlFormula:
    return _fold(Or, list(items), FALSE)


def sep(items: Iterable[SlFormula]) -> SlFormula:
    return _fold(Star, list(items), EMP)


def _fold(cls, items, unit):
    if not items:
        return unit
    acc = items[0]
    for x in items[1:]:
        acc = cls(acc, x)
    return acc


# ---------------------------------------------------------------------------
# QSL formulas


class QslFormula:
    """Base class of quantitative formulas."""

    __slots__ = ()


def _check_prob(p) -> Fraction:
    q = Fraction(p)
    if not 0 <= q <= 1:
        raise QslError(f"probability {q} outside [0, 1]")
    return q


@dataclass(frozen=True)
class Iverson(QslFormula):
    atom: Atom

    def __post_init__(self) -> None:
        if not isinstance(self.atom, Atom):
            raise TypeError("Iverson brackets hold a single atom")


@dataclass(frozen=True)
class BoolChoice(QslFormula):
    """``[b]*then + [!b]*other`` for a pure guard ``b``."""

    guard: Atom
    then: QslFormula
    other: QslFormula

    def __post_init__(self) -> None:
        if not isinstance(self.guard, Atom) or not self.guard.pure:
            raise NonPureGuard(f"guard {self.guard!r} is not a pure atom")


@dataclass(frozen=True)
class ConvexSum(QslFormula):
    p: Fraction
    left: QslFormula
    right: QslFormula

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", _check_prob(self.p))


@dataclass(frozen=True)
class Mul(QslFormula):
    left: QslFormula
    right: QslFormula


@dataclass(frozen=True)
class OneMinus(QslFormula):
    arg: QslFormula


@dataclass(frozen=True)
class Max(QslFormula):
    left: QslFormula
    right: QslFormula


@dataclass(frozen=True)
class Min(QslFormula):
    left: QslFormula
    right: QslFormula


@dataclass(frozen=True)
class SupQuant(QslFormula):
    var: str
    body: QslFormula


@dataclass(frozen=True)
class InfQuant(QslFormula):
    var: str
    body: QslFormula


@dataclass(frozen=True)
class QStar(QslFormula):
    left: QslFormula
    right: QslFormula


@dataclass(frozen=True)
class GuardedWand(QslFormula):
    """``[guard] -* body``; the guard may be any atom."""

    guard: Atom
    body: QslFormula

    def __post_init__(self) -> None:
        if not isinstance(self.guard, Atom):
            raise TypeError("wand antecedent must be an atom")


ONE = Iverson(TRUE)
ZERO = Iverson(FALSE)


def valid(e) -> QslFormula:
    """``S v: [e |-> v]``: the cell at ``e`` is allocated (k = 1)."""
    e = term(e)
    v = fresh_name("v", term_vars(e))
    return SupQuant(v, Iverson(pto(e, Var(v))))


# ---------------------------------------------------------------------------
# Programs


class Program:
    __slots__ = ()


@dataclass(frozen=True)
class Skip(Program):
    pass


@dataclass(frozen=True)
class Assign(Program):
    var: str
    expr: Term


@dataclass(frozen=True)
class Alloc(Program):
    var: str
    exprs: tuple[Term, ...]


@dataclass(frozen=True)
class Free(Program):
    expr: Term


@dataclass(frozen=True)
class Lookup(Program):
    var: str
    expr: Term


@dataclass(frozen=True)
class Mutate(Program):
    expr: Term
    values: tuple[Term, ...]


@dataclass(frozen=True)
class Seq(Program):
    first: Program
    second: Program


@dataclass(frozen=True)
class PChoice(Program):
    p: Fraction
    left: Program
    right: Program

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", _check_prob(self.p))


@dataclass(frozen=True)
class Ite(Program):
    guard: Atom
    then: Program
    other: Program

    def __post_init__(self) -> None:
        if not self.guard.pure:
            raise NonPureGuard(f"guard {self.guard.kind} is not pure")


@dataclass(frozen=True)
class While(Program):
    guard: Atom
    body: Program

    def __post_init__(self) -> None:
        if not self.guard.pure:
            raise NonPureGuard(f"guard {self.guard.kind} is not pure")


def seq(*cs: Program) -> Program:
    """Right-nested sequential composition."""
    if not cs:
        return Skip()
    acc = cs[-1]
    for c in reversed(cs[:-1]):
        acc = Seq(c, acc)
    return acc


# ---------------------------------------------------------------------------
# Free variables


def free_vars(x) -> frozenset[str]:
    """Free variables of an SL formula, a QSL formula or a program."""
    if isinstance(x, Program):
        return program_vars(x)
    return _fv(x)


def _fv(x) -> frozenset[str]:
    if isinstance(x, Atom):
        out: frozenset[str] = frozenset()
        for a in x.args:
            out |= term_vars(a)
        return out
    if isinstance(x, Iverson):
        return _fv(x.atom)
    if isinstance(x, (Exists, Forall, SupQuant, InfQuant)):
        return _fv(x.body) - {x.var}
    if isinstance(x, (Not, OneMinus)):
        return _fv(x.arg)
    if isinstance(x, BoolChoice):
        return _fv(x.guard) | _fv(x.then) | _fv(x.other)
    if isinstance(x, GuardedWand):
        return _fv(x.guard) | _fv(x.body)
    if isinstance(x, (And, Or, Star, Wand, ConvexSum, Mul, Max, Min, QStar)):
        return _fv(x.left) | _fv(x.right)
    raise TypeError(f"not a formula: {x!r}")


def all_vars(x) -> frozenset[str]:
    """Free and bound variable names occurring anywhere in a formula."""
    out: set[str] = set()
    for node in walk(x):
        if isinstance(node, Atom):
            for a in node.args:
                out |= term_vars(a)
        elif isinstance(node, (Exists, Forall, SupQuant, InfQuant)):
            out.add(node.var)
    return frozenset(out)


def literals(x) -> frozenset[int]:
    out: set[int] = set()
    for node in walk(x):
        if isinstance(node, Atom):
            out.update(a.value for a in node.args if isinstance(a, Lit))
    return frozenset(out)


def program_vars(c: Program) -> frozenset[str]:
    out: set[str] = set()
    for node in walk_program(c):
        if isinstance(node, (Assign, Alloc, Lookup)):
            out.add(node.var)
        for t in _program_terms(node):
            out |= term_vars(t)
        if isinstance(node, (Ite, While)):
            out |= _fv(node.guard)
    return frozenset(out)


def modified_vars(c: Program) -> frozenset[str]:
    return frozenset(
        n.var for n in walk_program(c) if isinstance(n, (Assign, Alloc, Lookup))
    )


def _program_terms(c: Program) -> tuple[Term, ...]:
    if isinstance(c, Assign):
        return (c.expr,)
    if isinstance(c, Alloc):
        return c.exprs
    if isinstance(c, (Free, Lookup)):
        return (c.expr,)
    if isinstance(c, Mutate):
        return (c.expr,) + c.values
    return ()


def walk_program(c: Program) -> Iterator[Program]:
    yield c
    if isinstance(c, (Seq,)):
        yield from walk_program(c.first)
        yield from walk_program(c.second)
    elif isinstance(c, (PChoice,)):
        yield from walk_program(c.left)
        yield from walk_program(c.right)
    elif isinstance(c, Ite):
        yield from walk_program(c.then)
        yield from walk_program(c.other)
    elif isinstance(c, While):
        yield from walk_program(c.body)


def children(x) -> tuple:
    if isinstance(x, Atom):
        return ()
    if isinstance(x, Iverson):
        return (x.atom,)
    if isinstance(x, (Not, OneMinus)):
        return (x.arg,)
    if isinstance(x, (Exists, Forall, SupQuant, InfQuant)):
        return (x.body,)
    if isinstance(x, BoolChoice):
        return (x.guard, x.then, x.other)
    if isinstance(x, GuardedWand):
        return (x.guard, x.body)
    return (x.left, x.right)


def walk(x) -> Iterator:
    """Pre-order traversal over formula nodes (atoms included)."""
    stack = [x]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


# ---------------------------------------------------------------------------
# Fresh names and substitution


def fresh_name(base: str, avoid: Iterable[str]) -> str:
    """``base`` decorated with the fewest primes that avoids ``avoid``."""
    avoid = set(avoid)
    root = base.rstrip("'")
    n = 1
    while True:
        cand = root + "'" * n
        if cand not in avoid:
            return cand
        n += 1


def _subst_term(t: Term, mapping: dict[str, Term]) -> Term:
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    return t


def subst_atom(a: Atom, mapping: dict[str, Term]) -> Atom:
    if not a.args:
        return a
    return Atom(a.kind, tuple(_subst_term(t, mapping) for t in a.args))


def subst(x, var: str, t) -> "SlFormula | QslFormula":
    """Capture-avoiding substitution ``x[var/t]``."""
    return subst_many(x, {var: term(t)})


def subst_many(x, mapping: dict[str, Term]):
    """Simultaneous capture-avoiding substitution."""
    mapping = {k: v for k, v in mapping.items() if v != Var(k)}
    if not mapping:
        return x
    return _subst(x, mapping)


def _subst(x, mapping: dict[str, Term]):
    if isinstance(x, Atom):
        return subst_atom(x, mapping)
    if isinstance(x, Iverson):
        return Iverson(subst_atom(x.atom, mapping))
    if isinstance(x, (Exists, Forall, SupQuant, InfQuant)):
        inner = {k: v for k, v in mapping.items() if k != x.var}
        if not inner:
            return x
        body_fv = _fv(x.body)
        inner = {k: v for k, v in inner.items() if k in body_fv}
        if not inner:
            return x
        incoming = set()
        for v in inner.values():
            incoming |= term_vars(v)
        var, body = x.var, x.body
        if var in incoming:
            new = fresh_name(var, incoming | body_fv | set(inner) | all_vars(x.body))
            body = _subst(body, {var: Var(new)})
            var = new
        return type(x)(var, _subst(body, inner))
    if isinstance(x, Not):
        return Not(_subst(x.arg, mapping))
    if isinstance(x, OneMinus):
        return OneMinus(_subst(x.arg, mapping))
    if isinstance(x, BoolChoice):
        return BoolChoice(
            subst_atom(x.guard, mapping), _subst(x.then, mapping), _subst(x.other, mapping)
        )
    if isinstance(x, GuardedWand):
        return GuardedWand(subst_atom(x.guard, mapping), _subst(x.body, mapping))
    if isinstance(x, ConvexSum):
        return ConvexSum(x.p, _subst(x.left, mapping), _subst(x.right, mapping))
    return type(x)(_subst(x.left, mapping), _subst(x.right, mapping))


def rename_bound(x, var: str, new: str):
    """Rename the variable bound at the root quantifier of ``x``."""
    return type(x)(new, subst(x.body, var, Var(new)))


def map_children(x, fn: Callable):
    """Rebuild ``x`` with ``fn`` applied to each formula child."""
    if isinstance(x, (Atom, Iverson)):
        return x
    if isinstance(x, (Not, OneMinus)):
        return type(x)(fn(x.arg))
    if isinstance(x, (Exists, Forall, SupQuant, InfQuant)):
        return type(x)(x.var, fn(x.body))
    if isinstance(x, BoolChoice):
        return BoolChoice(x.guard, fn(x.then), fn(x.other))
    if isinstance(x, GuardedWand):
        return GuardedWand(x.guard, fn(x.body))
    if isinstance(x, ConvexSum):
        return ConvexSum(x.p, fn(x.left), fn(x.right))
    return type(x)(fn(x.left), fn(x.right))


# ---------------------------------------------------------------------------
# Sizes


def sl_size(a: SlFormula) -> int:
    """Atoms count their declared size; each connective adds one."""
    total = 0
    for node in walk(a):
        total += node.size if isinstance(node, Atom) else 1
    return total


def qsl_size(f: QslFormula) -> int:
    if isinstance(f, Iverson):
        return f.atom.size
    if isinstance(f, BoolChoice):
        b = f.guard.size
        return 1 + b + qsl_size(f.then) + (1 + b) + qsl_size(f.other)
    if isinstance(f, GuardedWand):
        return 1 + qsl_size(f.body) + f.guard.size
    if isinstance(f, (OneMinus,)):
        return 1 + qsl_size(f.arg)
    if isinstance(f, (SupQuant, InfQuant)):
        return 1 + qsl_size(f.body)
    if isinstance(f, (ConvexSum, Mul, Max, Min, QStar)):
        return 1 + qsl_size(f.left) + qsl_size(f.right)
    raise TypeError(f"not a QSL formula: {f!r}")


def psize(f: QslFormula) -> int:
    """Number of convex-sum, product and separating-product nodes."""
    return sum(1 for n in walk(f) if isinstance(n, (ConvexSum, Mul, QStar)))
