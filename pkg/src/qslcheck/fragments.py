"""Fragment membership, capability accounting, prenexing and BSR encoding."""

from __future__ import annotations

from dataclasses import dataclass

from qslcheck.errors import FragmentError
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
    complement,
    fresh_name,
    free_vars,
    subst,
    walk,
)

QSH_ATOMS = frozenset({"true", "false", "emp", "pto", "eq", "neq", "eq_emp", "neq_emp"})
QSH_GUARDS = frozenset({"true", "false", "eq", "neq"})


def _qsh_node(f, allow_wand: bool) -> bool:
    if isinstance(f, Iverson):
        return f.atom.kind in QSH_ATOMS
    if isinstance(f, BoolChoice):
        return f.guard.kind in QSH_GUARDS
    if isinstance(f, (ConvexSum, SupQuant, QStar)):
        return True
    if isinstance(f, GuardedWand):
        return allow_wand and f.guard.kind == "pto"
    return False


def _in_fragment(f: QslFormula, allow_wand: bool) -> bool:
    for node in walk(f):
        if isinstance(node, Atom):
            continue
        if not _qsh_node(node, allow_wand):
            return False
    return True


def is_qsh(f: QslFormula) -> bool:
    """Symbolic-heap QSL: brackets, guarded choice, convex sums, S and *."""
    return _in_fragment(f, allow_wand=False)


def is_eqsh(f: QslFormula) -> bool:
    """QSH plus wands whose antecedent is a single points-to atom."""
    return _in_fragment(f, allow_wand=True)


@dataclass(frozen=True)
class Capabilities:
    """SL constructs: atom kinds plus connective tags."""

    atoms: frozenset[str] = frozenset()
    connectives: frozenset[str] = frozenset()

    def __or__(self, other: "Capabilities") -> "Capabilities":
        return Capabilities(self.atoms | other.atoms, self.connectives | other.connectives)

    def __le__(self, other: "Capabilities") -> bool:
        return self.atoms <= other.atoms and self.connectives <= other.connectives

    def to_json(self) -> dict:
        return {"atoms": sorted(self.atoms), "connectives": sorted(self.connectives)}


def _caps(atoms=(), conn=()) -> Capabilities:
    return Capabilities(frozenset(atoms), frozenset(conn))


S1 = _caps(QSH_ATOMS, {"and", "or", "exists", "star", "wand_pto"})
S2 = _caps(QSH_ATOMS, {"and", "or", "exists", "star"})


def required_capabilities(f: QslFormula) -> Capabilities:
    """Constructs that ``atleast(alpha, f)`` may use, for any ``alpha``."""
    if isinstance(f, Iverson):
        return _caps({"true", f.atom.kind})
    if isinstance(f, BoolChoice):
        b = f.guard
        own = _caps({b.kind, complement(b).kind}, {"and", "or"})
        return own | required_capabilities(f.then) | required_capabilities(f.other)
    if isinstance(f, OneMinus):
        return _caps({"true"}, {"not"}) | required_capabilities(f.arg)
    if isinstance(f, (SupQuant, InfQuant)):
        tag = "exists" if isinstance(f, SupQuant) else "forall"
        return _caps((), {tag}) | required_capabilities(f.body)
    if isinstance(f, GuardedWand):
        tag = "wand_pto" if f.guard.kind == "pto" else "wand"
        return _caps({f.guard.kind}, {tag}) | required_capabilities(f.body)
    own = {
        ConvexSum: {"and", "or"},
        Mul: {"and", "or"},
        QStar: {"and", "or", "star"},
        Max: {"or"},
        Min: {"and"},
    }[type(f)]
    return _caps((), own) | required_capabilities(f.left) | required_capabilities(f.right)


def used_capabilities(a: SlFormula) -> Capabilities:
    atoms, conn = set(), set()
    for node in walk(a):
        if isinstance(node, Atom):
            atoms.add(node.kind)
        elif isinstance(node, Wand):
            conn.add("wand_pto" if isinstance(node.left, Atom) and node.left.kind == "pto" else "wand")
        else:
            conn.add({Not: "not", And: "and", Or: "or", Exists: "exists",
                      Forall: "forall", Star: "star"}[type(node)])
    return _caps(atoms, conn)


def in_s1(a: SlFormula) -> bool:
    return used_capabilities(a) <= S1


def in_s2(a: SlFormula) -> bool:
    return used_capabilities(a) <= S2


# ---------------------------------------------------------------------------
# Prenex form


def split_prenex(a: SlFormula, avoid: set[str] | None = None) -> tuple[list[str], SlFormula]:
    """Hoist every existential of an S1 formula; returns ``(vars, matrix)``.

    Bound variables are renamed only when they clash with a free variable
    or with a previously hoisted one.
    """
    used = set(free_vars(a)) if avoid is None else set(avoid) | free_vars(a)
    out: list[str] = []
    matrix = _pnx(a, used, out)
    return out, matrix


def _pnx(a: SlFormula, used: set[str], out: list[str]) -> SlFormula:
    if isinstance(a, Atom):
        return a
    if isinstance(a, Exists):
        v, body = a.var, a.body
        if v in used:
            new = fresh_name(v, used | _names(a))
            body, v = subst(body, v, Var(new)), new
        used.add(v)
        out.append(v)
        return _pnx(body, used, out)
    if isinstance(a, (And, Or, Star)):
        left = _pnx(a.left, used, out)
        return type(a)(left, _pnx(a.right, used, out))
    if isinstance(a, Wand):
        if not (isinstance(a.left, Atom) and a.left.kind == "pto"):
            raise FragmentError("prenex needs wands with a points-to antecedent")
        return Wand(a.left, _pnx(a.right, used, out))
    raise FragmentError(f"{type(a).__name__} is outside the prenexable fragment")


def _names(a) -> set[str]:
    from qslcheck.syntax import all_vars

    return set(all_vars(a))


def prenex(a: SlFormula) -> SlFormula:
    """An equivalent formula ``E x1 ... E xn: c`` with ``c`` quantifier-free."""
    vs, m = split_prenex(a)
    for v in reversed(vs):
        m = Exists(v, m)
    return m


def to_bsr(lhs: SlFormula, rhs: SlFormula) -> SlFormula:
    """``E xs A ys: c1 & !c2``, unsatisfiable iff ``lhs |= rhs``.

    ``lhs`` must lie in S1 and ``rhs`` in S2, so no universally quantified
    variable ever sits under a wand.
    """
    if not in_s1(lhs):
        raise FragmentError("left-hand side is not in S1")
    if not in_s2(rhs):
        raise FragmentError("right-hand side is not in S2")
    shared = set(free_vars(lhs)) | set(free_vars(rhs))
    xs, c1 = split_prenex(lhs, shared)
    ys, c2 = split_prenex(rhs, shared | set(xs))
    out: SlFormula = And(c1, Not(c2))
    for y in reversed(ys):
        out = Forall(y, out)
    for x in reversed(xs):
        out = Exists(x, out)
    return out
