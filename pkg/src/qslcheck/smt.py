"""SMT-LIB emission for SL entailments and an external-solver driver.

Two dialects are supported: ``cvc-classic`` (CVC4-era logic string and
indexed ``emp``) and ``cvc-modern`` (cvc5 ``QF_ALL`` and ``sep.emp``).
The classic dialect is the default.  The solver command comes from :class:`SmtConfig` or ``QSL_SOLVER_CMD``; the
script path is appended as the last argument.
"""

from __future__ import annotations

import logging
import os
import re
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from qslcheck.errors import QuantifierUnsupported, SolverError, UnsupportedAtom
from qslcheck.semantics import Verdict
from qslcheck.syntax import (
    And,
    Atom,
    Exists,
    Forall,
    Lit,
    Not,
    Or,
    SlFormula,
    Star,
    Var,
    Wand,
    free_vars,
    walk,
)

log = logging.getLogger(__name__)

DIALECTS = {
    "cvc-classic": {"logic": "QF_ALL_SUPPORTED", "emp": "(_ emp {loc} {val})"},
    "cvc-modern": {"logic": "QF_ALL", "emp": "sep.emp"},
}


@dataclass(frozen=True)
class SmtConfig:
    dialect: str = "cvc-classic"
    solver_cmd: str | None = None
    timeout: float = 60.0
    logic: str | None = None

    def __post_init__(self) -> None:
        if self.dialect not in DIALECTS:
            raise ValueError(f"unknown dialect {self.dialect!r}; choose from {sorted(DIALECTS)}")

    @property
    def logic_name(self) -> str:
        return self.logic or DIALECTS[self.dialect]["logic"]

    def command(self) -> list[str] | None:
        cmd = self.solver_cmd or os.environ.get("QSL_SOLVER_CMD")
        return shlex.split(cmd) if cmd else None


@dataclass(frozen=True)
class SmtJob:
    script: str
    sorts: dict[str, str] = field(default_factory=dict)
    heap: tuple[str, str] = ("Loc", "Int")


# ---------------------------------------------------------------------------
# Sort inference


class _Sorts:
    """Union-find over variables, tagged by address or value use."""

    def __init__(self) -> None:
        self.parent: dict = {}
        self.tags: dict = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb
            self.tags.setdefault(rb, set()).update(self.tags.pop(ra, set()))

    def tag(self, x, t: str) -> None:
        self.tags.setdefault(self.find(x), set()).add(t)

    def tags_of(self, x) -> set:
        return self.tags.get(self.find(x), set())


def _key(t):
    return ("var", t.name) if isinstance(t, Var) else ("lit", t.value)


def infer_sorts(formulas: Iterable[SlFormula]) -> tuple[tuple[str, str], dict[str, str]]:
    """Heap sorts and a sort per variable.

    Addresses get the uninterpreted sort ``Loc`` unless some variable is
    used both as an address and as a stored value, or a literal is compared
    with an address; then everything is ``Int``.
    """
    uf = _Sorts()
    names: set[str] = set()
    for f in formulas:
        for node in walk(f):
            if isinstance(node, (Exists, Forall)):
                names.add(node.var)
            if not isinstance(node, Atom):
                continue
            for t in node.args:
                uf.find(_key(t))
                if isinstance(t, Var):
                    names.add(t.name)
                else:
                    uf.tag(_key(t), "lit")
            if node.kind == "pto":
                uf.tag(_key(node.args[0]), "loc")
                for t in node.args[1:]:
                    uf.tag(_key(t), "val")
            elif node.kind in ("eq", "neq", "eq_emp", "neq_emp", "ls"):
                uf.union(_key(node.args[0]), _key(node.args[1]))
                if node.kind == "ls":
                    uf.tag(_key(node.args[0]), "loc")
    clash = any(
        "loc" in tags and ("val" in tags or "lit" in tags)
        for tags in (uf.tags_of(key) for key in list(uf.parent))
    )
    if clash:
        return ("Int", "Int"), {n: "Int" for n in sorted(names)}
    sorts = {n: ("Loc" if "loc" in uf.tags_of(_key(Var(n))) else "Int") for n in sorted(names)}
    return ("Loc", "Int"), sorts


# ---------------------------------------------------------------------------
# Emission


_SIMPLE = re.compile(r"^[A-Za-z_~!@$%^&*+=<>.?/\-][A-Za-z0-9_~!@$%^&*+=<>.?/\-]*$")


def symbol(name: str) -> str:
    return name if _SIMPLE.match(name) else f"|{name}|"


class _Emitter:
    def __init__(self, cfg: SmtConfig, heap: tuple[str, str], sorts: dict[str, str],
                 width: int = 1):
        self.cfg = cfg
        self.width = width
        self.heap = heap
        self.sorts = sorts
        self.quantified = not cfg.logic_name.startswith("QF_")

    def term(self, t) -> str:
        return symbol(t.name) if isinstance(t, Var) else str(t.value)

    def emp(self) -> str:
        return DIALECTS[self.cfg.dialect]["emp"].format(loc=self.heap[0], val=self.heap[1])

    def atom(self, a: Atom) -> str:
        k = a.kind
        if k in ("true", "false"):
            return k
        if k == "emp":
            return self.emp()
        if k in ("eq", "neq", "eq_emp", "neq_emp"):
            x, y = (self.term(t) for t in a.args)
            core = f"({'distinct' if k.startswith('neq') else '='} {x} {y})"
            return f"(and {core} {self.emp()})" if k.endswith("_emp") else core
        if k == "pto":
            vals = [self.term(t) for t in a.args[1:]]
            if len(vals) != self.width:
                raise UnsupportedAtom(f"points-to of width {len(vals)} in a width-{self.width} heap")
            cell = vals[0] if self.width == 1 else f"(rec {' '.join(vals)})"
            return f"(pto {self.term(a.args[0])} {cell})"
        raise UnsupportedAtom(f"dialect {self.cfg.dialect} has no encoding for atom {k}")

    def formula(self, a: SlFormula) -> str:
        if isinstance(a, Atom):
            return self.atom(a)
        if isinstance(a, Not):
            return f"(not {self.formula(a.arg)})"
        if isinstance(a, (Exists, Forall)):
            if not self.quantified:
                raise QuantifierUnsupported(
                    f"quantifier over {a.var} under logic {self.cfg.logic_name}"
                )
            q = "exists" if isinstance(a, Exists) else "forall"
            return f"({q} (({symbol(a.var)} {self.sorts.get(a.var, 'Int')})) {self.formula(a.body)})"
        op = {And: "and", Or: "or", Star: "sep", Wand: "wand"}[type(a)]
        return f"({op} {self.formula(a.left)} {self.formula(a.right)})"


def emit_many(pairs: Sequence[tuple[SlFormula, SlFormula]], cfg: SmtConfig = SmtConfig()) -> SmtJob:
    """One script asserting that some ``lhs & !rhs`` is satisfiable.

    The script is unsat exactly when every entailment holds.  Several
    obligations are joined by a right-nested ``or``.
    """
    if not pairs:
        raise ValueError("no obligations to emit")
    formulas = [x for p in pairs for x in p]
    heap, sorts = infer_sorts(formulas)
    widths = {n.width for f in formulas for n in walk(f) if isinstance(n, Atom) and n.kind == "pto"}
    if len(widths) > 1:
        raise UnsupportedAtom(f"points-to atoms of mixed widths {sorted(widths)}")
    width = widths.pop() if widths else 1
    if width > 1:
        heap = (heap[0], "Rec")
    em = _Emitter(cfg, heap, sorts, width)
    terms = [f"(and {em.formula(l)} (not {em.formula(r)}))" for l, r in pairs]
    body = terms[-1]
    for t in reversed(terms[:-1]):
        body = f"(or {t} {body})"
    fv = sorted(set().union(*(free_vars(x) for x in formulas)))
    lines = [f"(set-logic {cfg.logic_name})"]
    if heap[0] == "Loc":
        lines.append("(declare-sort Loc 0)")
    if width > 1:
        fields = " ".join(f"(f{i} Int)" for i in range(width))
        lines.append(f"(declare-datatype Rec ((rec {fields})))")
    lines.append(f"(declare-heap ({heap[0]} {heap[1]}))")
    lines += [f"(declare-const {symbol(v)} {sorts[v]})" for v in fv]
    lines.append(f"(assert {body})")
    lines.append("(check-sat)")
    return SmtJob("\n".join(lines) + "\n", {v: sorts[v] for v in fv}, heap)


def emit(lhs: SlFormula, rhs: SlFormula, cfg: SmtConfig = SmtConfig()) -> SmtJob:
    return emit_many([(lhs, rhs)], cfg)


# ---------------------------------------------------------------------------
# Running a solver


def parse_answer(stdout: str) -> str | None:
    for line in stdout.splitlines():
        word = line.strip()
        if not word:
            continue
        if word in ("sat", "unsat", "unknown"):
            return word
        if word.startswith("(error"):
            return None
    return None


def run(job: SmtJob, cfg: SmtConfig = SmtConfig()) -> Verdict:
    """Run the configured solver on ``job``.

    ``unsat`` means the entailment holds.  Timeouts and ``unknown`` give an
    unknown verdict; a missing solver or unparseable output gives an error.
    """
    cmd = cfg.command()
    if not cmd:
        return Verdict("error", reason="no solver configured (set QSL_SOLVER_CMD)")
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "query.smt2")
        with open(path, "w") as fh:
            fh.write(job.script)
        log.debug("running %s on %s", cmd, path)
        try:
            proc = subprocess.run(
                cmd + [path], capture_output=True, text=True, timeout=cfg.timeout
            )
        except subprocess.TimeoutExpired:
            return Verdict("unknown", reason=f"timeout after {cfg.timeout}s")
        except OSError as exc:
            return Verdict("error", reason=f"cannot run solver: {exc}")
    answer = parse_answer(proc.stdout)
    if answer == "unsat":
        return Verdict("entails")
    if answer == "sat":
        return Verdict("fails", reason="solver found a model of lhs & !rhs")
    if answer == "unknown":
        return Verdict("unknown", reason="solver answered unknown")
    detail = (proc.stdout + proc.stderr).strip().splitlines()[:3]
    return Verdict("error", reason=f"solver exit {proc.returncode}: {' | '.join(detail)}")


class SmtBackend:
    """Discharges SL entailments with an external solver."""

    name = "smt"

    def __init__(self, cfg: SmtConfig = SmtConfig()):
        self.cfg = cfg

    def sl_entails(self, lhs: SlFormula, rhs: SlFormula) -> Verdict:
        try:
            job = emit(lhs, rhs, self.cfg)
        except (UnsupportedAtom, QuantifierUnsupported) as exc:
            return Verdict("error", reason=str(exc))
        return run(job, self.cfg)


# ---------------------------------------------------------------------------
# S-expressions (for comparing scripts modulo connective order)


def parse_sexprs(text: str) -> list:
    tokens = re.findall(r"\(|\)|\|[^|]*\||[^\s()]+", text)
    pos = 0

    def one():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            out = []
            while tokens[pos] != ")":
                out.append(one())
            pos += 1
            return out
        if tok == ")":
            raise SolverError("unbalanced parenthesis")
        return tok

    out = []
    while pos < len(tokens):
        out.append(one())
    return out


def normalize_sexpr(e):
    """Canonical form: ``and``/``or``/``sep`` flattened and sorted, units dropped.

    ``and`` and ``or`` are also deduplicated; ``sep`` is not idempotent and
    keeps repeated operands.
    """
    if not isinstance(e, list) or not e:
        return e
    head, args = e[0], [normalize_sexpr(x) for x in e[1:]]
    if head in ("and", "or", "sep"):
        flat = []
        for a in args:
            if isinstance(a, tuple) and a and a[0] == head:
                flat.extend(a[1:])
            else:
                flat.append(a)
        unit = {"and": "true", "or": "false"}.get(head)
        if unit is not None:
            flat = [a for a in flat if a != unit]
            flat = list(dict.fromkeys(flat))
        flat.sort(key=repr)
        if len(flat) == 1:
            return flat[0]
        if not flat:
            return unit
        return (head, *flat)
    return (head, *args)
