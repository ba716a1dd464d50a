"""Concrete syntax: tokenizer, recursive-descent parsers and printers.

SL::

    true  false  emp  t = t  t != t  t =emp t  t !=emp t
    t |-> t   t |-> (t, ..., t)   ls(t, t)
    !a   a & b   a | b   a * b   a -* b   E x: a   A x: a

``*`` and ``-*`` bind tighter than ``&``, which binds tighter than ``|``;
``-*`` associates to the right and quantifiers extend as far right as
possible.

QSL::

    [atom]   [b]*f + [!b]*g   p*f + (1-p)*g   f . g   1 - f
    max(f, g)   min(f, g)   S x: f   J x: f   f * g   [atom] -* f

A bare ``p*f`` abbreviates ``p*f + (1-p)*[false]``.

Programs::

    skip   x := e   x := new(e, ...)   free(e)   x := <e>   <e> := e'
    c; c   {c} [p] {c}   if (b) {c} else {c}   while (b) {c}
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from qslcheck.errors import GuardedWandRestriction, NonPureGuard, ParseError
from qslcheck.syntax import (
    Alloc,
    And,
    Assign,
    Atom,
    BoolChoice,
    ConvexSum,
    Exists,
    FALSE,
    Forall,
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
    Not,
    OneMinus,
    Or,
    PChoice,
    Program,
    QStar,
    QslFormula,
    Seq,
    Skip,
    SlFormula,
    Star,
    SupQuant,
    Var,
    Wand,
    While,
    complement,
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<num>\d+(?:\.\d+)?(?:/\d+)?)
  | (?P<op>\|->|-\*|!=emp(?![\w'])|=emp(?![\w'])|:=|!=|[=!&|*.+\-()\[\],:;{}<>])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*'*)
    """,
    re.VERBOSE,
)

SL_KEYWORDS = {"true", "false", "emp", "ls", "E", "A"}
QSL_KEYWORDS = SL_KEYWORDS | {"S", "J", "max", "min"}
PROGRAM_KEYWORDS = {"skip", "new", "free", "if", "else", "while", "true", "false"}


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "op", "ident", "eof"
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind != "ws":
            out.append(Token(kind, m.group(), line, pos - line_start + 1))
        chunk = m.group()
        if "\n" in chunk:
            line += chunk.count("\n")
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


def parse_prob(text: str) -> Fraction:
    try:
        p = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"bad probability {text!r}") from None
    if not 0 <= p <= 1:
        raise ParseError(f"probability {text} outside [0, 1]")
    return p


class _Parser:
    keywords: set[str] = set()

    def __init__(self, text: str, k: int = 1):
        self.toks = tokenize(text)
        self.i = 0
        self.k = k

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, n: int = 1) -> Token:
        return self.toks[min(self.i + n, len(self.toks) - 1)]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("op", "ident") and t.text in texts

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.advance()

    def fail(self, msg: str, tok: Token | None = None, cls=ParseError):
        t = tok or self.tok
        found = t.text or "end of input"
        raise cls(f"{msg}, found {found!r}", t.line, t.col)

    def ident(self) -> str:
        t = self.tok
        if t.kind != "ident" or t.text in self.keywords:
            self.fail("expected a variable name")
        self.advance()
        return t.text

    def done(self) -> None:
        if self.tok.kind != "eof":
            self.fail("unexpected trailing input")

    # -- terms and atoms
    def term(self):
        t = self.tok
        if t.kind == "num":
            if not t.text.isdigit():
                self.fail("term literals must be integers")
            self.advance()
            return Lit(int(t.text))
        return Var(self.ident())

    def starts_term(self) -> bool:
        t = self.tok
        return (t.kind == "num" and t.text.isdigit()) or (
            t.kind == "ident" and t.text not in self.keywords
        )

    def atom(self) -> Atom:
        if self.at("true"):
            self.advance()
            return Atom("true")
        if self.at("false"):
            self.advance()
            return Atom("false")
        if self.at("emp"):
            self.advance()
            return Atom("emp")
        if self.at("ls"):
            self.advance()
            self.expect("(")
            a = self.term()
            self.expect(",")
            b = self.term()
            self.expect(")")
            return Atom("ls", (a, b))
        if not self.starts_term():
            self.fail("expected an atom")
        lhs = self.term()
        op = self.tok
        ops = {"=": "eq", "!=": "neq", "=emp": "eq_emp", "!=emp": "neq_emp"}
        if op.text in ops and op.kind == "op":
            self.advance()
            return Atom(ops[op.text], (lhs, self.term()))
        if op.text == "|->":
            self.advance()
            if self.at("("):
                self.advance()
                vals = [self.term()]
                while self.at(","):
                    self.advance()
                    vals.append(self.term())
                self.expect(")")
            else:
                vals = [self.term()]
            if len(vals) != self.k:
                self.fail(f"record width {len(vals)} does not match k = {self.k}", op)
            return Atom("pto", (lhs, *vals))
        self.fail("expected an atom operator")


class SlParser(_Parser):
    keywords = SL_KEYWORDS

    def formula(self) -> SlFormula:
        if self.at("E", "A"):
            return self.quant()
        return self.disj()

    def quant(self) -> SlFormula:
        q = self.advance().text
        v = self.ident()
        self.expect(":")
        body = self.formula()
        return Exists(v, body) if q == "E" else Forall(v, body)

    def disj(self) -> SlFormula:
        left = self.conj()
        while self.at("|"):
            self.advance()
            left = Or(left, self.conj())
        return left

    def conj(self) -> SlFormula:
        left = self.wand()
        while self.at("&"):
            self.advance()
            left = And(left, self.wand())
        return left

    def wand(self) -> SlFormula:
        left = self.star()
        if self.at("-*"):
            self.advance()
            return Wand(left, self.wand())
        return left

    def star(self) -> SlFormula:
        left = self.unary()
        while self.at("*"):
            self.advance()
            left = Star(left, self.unary())
        return left

    def unary(self) -> SlFormula:
        if self.at("!"):
            self.advance()
            return Not(self.unary())
        if self.at("E", "A"):
            return self.quant()
        if self.at("("):
            self.advance()
            inner = self.formula()
            self.expect(")")
            return inner
        return self.atom()


# Intermediate QSL nodes that only make sense inside a ``+`` sum.
@dataclass(frozen=True)
class _Coef(QslFormula):
    p: Fraction


@dataclass(frozen=True)
class _NegGuard(QslFormula):
    atom: Atom


@dataclass(frozen=True)
class _Scaled(QslFormula):
    """``p * f`` or ``[b] * f`` awaiting its partner summand."""

    head: QslFormula
    body: QslFormula
    original: QslFormula | None = None


class QslParser(_Parser):
    keywords = QSL_KEYWORDS

    def formula(self) -> QslFormula:
        f = self.expr()
        return self.resolve(f, self.tok)

    def resolve(self, f: QslFormula, tok: Token) -> QslFormula:
        if isinstance(f, _Scaled):
            if isinstance(f.head, _Coef):
                return ConvexSum(f.head.p, f.body, Iverson(FALSE))
            if f.original is not None:
                return f.original
            self.fail("negated guard outside a choice", tok)
        if isinstance(f, (_Coef,)):
            self.fail("coefficient without an operand", tok)
        if isinstance(f, _NegGuard):
            self.fail("negated guard outside a choice", tok)
        return f

    def expr(self) -> QslFormula:
        if self.at("S", "J"):
            return self.quant()
        return self.sum()

    def quant(self) -> QslFormula:
        q = self.advance().text
        v = self.ident()
        self.expect(":")
        body = self.formula()
        return SupQuant(v, body) if q == "S" else InfQuant(v, body)

    def sum(self) -> QslFormula:
        start = self.tok
        left = self.wand()
        if not self.at("+"):
            return left
        plus = self.advance()
        right = self.wand()
        if not (isinstance(left, _Scaled) and isinstance(right, _Scaled)):
            self.fail("'+' joins 'p*f + (1-p)*g' or '[b]*f + [!b]*g'", plus)
        lh, rh = left.head, right.head
        if isinstance(lh, _Coef) and isinstance(rh, _Coef):
            if lh.p + rh.p != 1:
                self.fail(f"coefficients {lh.p} and {rh.p} do not sum to 1", plus)
            return ConvexSum(lh.p, left.body, right.body)
        if isinstance(lh, Iverson) and isinstance(rh, (Iverson, _NegGuard)):
            b = lh.atom
            if not b.pure:
                raise NonPureGuard(f"{start.line}:{start.col}: choice guard {b.kind} is not pure")
            if isinstance(rh, _NegGuard):
                ok = rh.atom == b
            else:
                ok = rh.atom == complement(b)
            if not ok:
                self.fail("second guard must negate the first", plus)
            return BoolChoice(b, left.body, right.body)
        self.fail("mismatched summands", plus)

    def wand(self) -> QslFormula:
        start = self.tok
        left = self.star()
        if self.at("-*"):
            op = self.advance()
            if not isinstance(left, Iverson):
                self.fail("wand antecedent must be a bracketed atom", start, GuardedWandRestriction)
            body = self.resolve(self.wand(), op)
            return GuardedWand(left.atom, body)
        return left

    def star(self) -> QslFormula:
        start = self.tok
        factors = [self.mul()]
        while self.at("*"):
            self.advance()
            factors.append(self.mul())
        if len(factors) == 1:
            return factors[0]
        for f in factors[1:]:
            if isinstance(f, (_Coef, _NegGuard, _Scaled)):
                self.fail("coefficient or guard in operand position", start)
        rest = factors[1]
        for f in factors[2:]:
            rest = QStar(rest, f)
        head = factors[0]
        if isinstance(head, (_Coef, _NegGuard)):
            return _Scaled(head, rest)
        if isinstance(head, _Scaled):
            self.fail("coefficient or guard in operand position", start)
        acc = head
        for f in factors[1:]:
            acc = QStar(acc, f)
        if isinstance(head, Iverson):
            # becomes a choice if a '+' follows, otherwise stays a product
            return _Scaled(head, rest, acc)
        return acc

    def mul(self) -> QslFormula:
        start = self.tok
        left = self.pre()
        while self.at("."):
            self.advance()
            right = self.pre()
            for f in (left, right):
                if isinstance(f, (_Coef, _NegGuard)):
                    self.fail("coefficient or guard in operand position", start)
            left = Mul(left, right)
        return left

    def pre(self) -> QslFormula:
        t = self.tok
        if t.kind == "num" and t.text == "1" and self.peek().text == "-":
            self.advance()
            self.advance()
            arg = self.pre()
            if isinstance(arg, _Coef):
                return _Coef(1 - arg.p)
            if isinstance(arg, _NegGuard):
                self.fail("negated guard outside a choice", t)
            return OneMinus(arg)
        if self.at("S", "J"):
            return self.quant()
        return self.primary()

    def primary(self) -> QslFormula:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return _Coef(parse_prob(t.text))
        if self.at("("):
            self.advance()
            inner = self.expr()
            self.expect(")")
            if isinstance(inner, _Scaled):
                return self.resolve(inner, t)
            return inner
        if self.at("["):
            self.advance()
            neg = False
            if self.at("!"):
                self.advance()
                neg = True
                if self.at("("):
                    self.advance()
                    a = self.atom()
                    self.expect(")")
                else:
                    a = self.atom()
            else:
                a = self.atom()
            self.expect("]")
            return _NegGuard(a) if neg else Iverson(a)
        if self.at("max", "min"):
            name = self.advance().text
            self.expect("(")
            a = self.formula()
            self.expect(",")
            b = self.formula()
            self.expect(")")
            return Max(a, b) if name == "max" else Min(a, b)
        self.fail("expected a quantitative formula")


class ProgramParser(_Parser):
    keywords = PROGRAM_KEYWORDS

    def program(self) -> Program:
        stmts = [self.stmt()]
        while self.at(";"):
            self.advance()
            if self.at("}") or self.tok.kind == "eof":
                break
            stmts.append(self.stmt())
        acc = stmts[-1]
        for s in reversed(stmts[:-1]):
            acc = Seq(s, acc)
        return acc

    def terms(self) -> tuple:
        vals = [self.term()]
        while self.at(","):
            self.advance()
            vals.append(self.term())
        return tuple(vals)

    def guard(self) -> Atom:
        t = self.tok
        a = self.atom()
        if not a.pure:
            raise NonPureGuard(f"{t.line}:{t.col}: guard {a.kind} is not a pure atom")
        return a

    def block(self) -> Program:
        self.expect("{")
        c = self.program()
        self.expect("}")
        return c

    def stmt(self) -> Program:
        if self.at("skip"):
            self.advance()
            return Skip()
        if self.at("free"):
            self.advance()
            self.expect("(")
            e = self.term()
            self.expect(")")
            return Free(e)
        if self.at("<"):
            self.advance()
            e = self.term()
            self.expect(">")
            self.expect(":=")
            if self.at("("):
                self.advance()
                vals = self.terms()
                self.expect(")")
            else:
                vals = (self.term(),)
            if len(vals) != self.k:
                self.fail(f"record width {len(vals)} does not match k = {self.k}")
            return Mutate(e, vals)
        if self.at("{"):
            left = self.block()
            self.expect("[")
            num = self.tok
            if num.kind != "num":
                self.fail("expected a probability")
            self.advance()
            self.expect("]")
            right = self.block()
            return PChoice(parse_prob(num.text), left, right)
        if self.at("if"):
            self.advance()
            self.expect("(")
            b = self.guard()
            self.expect(")")
            then = self.block()
            self.expect("else")
            return Ite(b, then, self.block())
        if self.at("while"):
            self.advance()
            self.expect("(")
            b = self.guard()
            self.expect(")")
            return While(b, self.block())
        x = self.ident()
        self.expect(":=")
        if self.at("new"):
            self.advance()
            self.expect("(")
            vals = self.terms()
            self.expect(")")
            if len(vals) != self.k:
                self.fail(f"record width {len(vals)} does not match k = {self.k}")
            return Alloc(x, vals)
        if self.at("<"):
            self.advance()
            e = self.term()
            self.expect(">")
            return Lookup(x, e)
        return Assign(x, self.term())


def parse_sl(text: str, k: int = 1) -> SlFormula:
    p = SlParser(text, k)
    f = p.formula()
    p.done()
    return f


def parse_qsl(text: str, k: int = 1) -> QslFormula:
    p = QslParser(text, k)
    f = p.formula()
    p.done()
    return f


def parse_program(text: str, k: int = 1) -> Program:
    p = ProgramParser(text, k)
    c = p.program()
    p.done()
    return c


# ---------------------------------------------------------------------------
# Printing


def fmt_prob(p: Fraction) -> str:
    """Finite decimals print as decimals, everything else as n/m."""
    p = Fraction(p)
    if p.denominator == 1:
        return str(p.numerator)
    d = p.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{p.numerator}/{p.denominator}"
    digits = max(twos, fives)
    scaled = p * 10**digits
    s = str(scaled.numerator).rjust(digits + 1, "0")
    return f"{s[:-digits]}.{s[-digits:]}"


def atom_text(a: Atom) -> str:
    args = [str(t) for t in a.args]
    if a.kind in ("true", "false", "emp"):
        return a.kind
    if a.kind == "ls":
        return f"ls({args[0]}, {args[1]})"
    if a.kind == "pto":
        vals = args[1:]
        rhs = vals[0] if len(vals) == 1 else "(" + ", ".join(vals) + ")"
        return f"{args[0]} |-> {rhs}"
    op = {"eq": "=", "neq": "!=", "eq_emp": "=emp", "neq_emp": "!=emp"}[a.kind]
    return f"{args[0]} {op} {args[1]}"


def _infix_atom(a: Atom) -> bool:
    return a.kind not in ("true", "false", "emp", "ls")


_SL_PREC = {Exists: 0, Forall: 0, Or: 1, And: 2, Wand: 3, Star: 4, Not: 5}


def sl_text(a: SlFormula, ctx: int = 0) -> str:
    if isinstance(a, Atom):
        s = atom_text(a)
        return f"({s})" if ctx >= 6 and _infix_atom(a) else s
    prec = _SL_PREC[type(a)]
    if isinstance(a, (Exists, Forall)):
        q = "E" if isinstance(a, Exists) else "A"
        s = f"{q} {a.var}: {sl_text(a.body, 0)}"
    elif isinstance(a, Not):
        s = "!" + sl_text(a.arg, 6)
    elif isinstance(a, Wand):
        s = f"{sl_text(a.left, prec + 1)} -* {sl_text(a.right, prec)}"
    else:
        op = {Or: "|", And: "&", Star: "*"}[type(a)]
        s = f"{sl_text(a.left, prec)} {op} {sl_text(a.right, prec + 1)}"
    return f"({s})" if prec < ctx or (prec == 0 and ctx > 0) else s


def _guard_text(b: Atom) -> str:
    return f"[{atom_text(b)}]"


def qsl_text(f: QslFormula, ctx: int = 0) -> str:
    # quant 0, sum 1, wand 2, star 3, mul 4, one-minus 5, primary 6
    if isinstance(f, Iverson):
        return f"[{atom_text(f.atom)}]"
    if isinstance(f, Max):
        return f"max({qsl_text(f.left)}, {qsl_text(f.right)})"
    if isinstance(f, Min):
        return f"min({qsl_text(f.left)}, {qsl_text(f.right)})"
    if isinstance(f, (SupQuant, InfQuant)):
        prec = 0
        q = "S" if isinstance(f, SupQuant) else "J"
        s = f"{q} {f.var}: {qsl_text(f.body, 0)}"
    elif isinstance(f, BoolChoice):
        prec = 1
        b = f.guard
        neg = atom_text(b)
        neg = f"!({neg})" if _infix_atom(b) else f"!{neg}"
        s = f"{_guard_text(b)} * {qsl_text(f.then, 4)} + [{neg}] * {qsl_text(f.other, 4)}"
    elif isinstance(f, ConvexSum):
        prec = 1
        s = (
            f"{fmt_prob(f.p)} * {qsl_text(f.left, 4)} + "
            f"(1-{fmt_prob(f.p)}) * {qsl_text(f.right, 4)}"
        )
    elif isinstance(f, GuardedWand):
        prec = 2
        s = f"{_guard_text(f.guard)} -* {qsl_text(f.body, 2)}"
    elif isinstance(f, QStar):
        prec = 3
        left = qsl_text(f.left, 3)
        # a leading pure bracket would be read as a choice guard before '+'
        s = f"{left} * {qsl_text(f.right, 4)}"
    elif isinstance(f, Mul):
        prec = 4
        s = f"{qsl_text(f.left, 4)} . {qsl_text(f.right, 5)}"
    elif isinstance(f, OneMinus):
        prec = 5
        s = f"1 - {qsl_text(f.arg, 5)}"
    else:
        raise TypeError(f"not a QSL formula: {f!r}")
    return f"({s})" if prec < ctx or (prec == 0 and ctx > 0) else s


def program_text(c: Program, indent: str = "") -> str:
    def blk(x: Program) -> str:
        return "{ " + program_text(x) + " }"

    if isinstance(c, Skip):
        return "skip"
    if isinstance(c, Assign):
        return f"{c.var} := {c.expr}"
    if isinstance(c, Alloc):
        return f"{c.var} := new({', '.join(map(str, c.exprs))})"
    if isinstance(c, Free):
        return f"free({c.expr})"
    if isinstance(c, Lookup):
        return f"{c.var} := <{c.expr}>"
    if isinstance(c, Mutate):
        vals = c.values
        rhs = str(vals[0]) if len(vals) == 1 else "(" + ", ".join(map(str, vals)) + ")"
        return f"<{c.expr}> := {rhs}"
    if isinstance(c, Seq):
        return f"{program_text(c.first)}; {program_text(c.second)}"
    if isinstance(c, PChoice):
        return f"{blk(c.left)} [{fmt_prob(c.p)}] {blk(c.right)}"
    if isinstance(c, Ite):
        return f"if ({atom_text(c.guard)}) {blk(c.then)} else {blk(c.other)}"
    if isinstance(c, While):
        return f"while ({atom_text(c.guard)}) {blk(c.body)}"
    raise TypeError(f"not a program: {c!r}")


def to_text(x) -> str:
    """Pretty-print any formula or program."""
    if isinstance(x, Program):
        return program_text(x)
    if isinstance(x, QslFormula):
        return qsl_text(x)
    if isinstance(x, SlFormula):
        return sl_text(x)
    raise TypeError(f"cannot print {x!r}")
