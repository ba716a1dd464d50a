from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from qslcheck.errors import LoopError
from qslcheck.fragments import is_eqsh
from qslcheck.gen import BASE_STATEMENTS
from qslcheck.reduction import OracleBackend, check, plan
from qslcheck.semantics import Domain, entails_oracle, equivalent
from qslcheck.syntax import (
    ONE,
    BoolChoice,
    ConvexSum,
    GuardedWand,
    InfQuant,
    Iverson,
    QStar,
    Skip,
    SupQuant,
    Var,
    complement,
    free_vars,
    program_vars,
    pto,
    subst,
    valid,
    walk,
)
from qslcheck.text import parse_program, parse_qsl
from qslcheck.wlp import (
    FULL_REGISTRY,
    QSH_REGISTRY,
    check_closure,
    invariant_check,
    operational_mismatch,
    wlp,
    wlp_nowand,
)

from helpers import A2, POPULATE_INV, POPULATE_LOOP, SWAP, SWAP_POST, SWAP_PRE, gen

P = parse_program
Q = parse_qsl


def test_skip_and_assign():
    f = Q("[x |-> z]")
    assert wlp(Skip(), f) == f
    assert wlp(P("x := y"), f) == subst(f, "x", Var("y"))


def test_alloc_rule_shape():
    w = wlp(P("x := new(y)"), Q("[x |-> z]"))
    assert isinstance(w, InfQuant) and isinstance(w.body, GuardedWand)
    assert w.body.guard == pto(w.var, "y")
    assert w.var not in {"x", "y", "z"}


def test_free_rule_shape():
    w = wlp(P("free(x)"), Q("[emp]"))
    assert isinstance(w, SupQuant) and isinstance(w.body, QStar)


def test_lookup_rule_shape():
    w = wlp(P("x := <y>"), Q("[x = z]"))
    assert isinstance(w, SupQuant)
    assert isinstance(w.body.right, GuardedWand)


def test_mutate_rule_shape():
    w = wlp(P("<x> := 1"), Q("[emp]"))
    assert isinstance(w, QStar) and isinstance(w.left, SupQuant)
    assert isinstance(w.right, GuardedWand)


def test_pchoice_is_convex_sum():
    c = P("{x := 1} [1/3] {free(x)}")
    f = Q("[x = 1]")
    assert wlp(c, f) == ConvexSum(F(1, 3), wlp(c.left, f), wlp(c.right, f))


def test_ite_is_choice():
    c = P("if (x = y) {skip} else {x := y}")
    assert isinstance(wlp(c, Q("[x = y]")), BoolChoice)


def test_loop_raises():
    with pytest.raises(LoopError):
        wlp(P("while (x = 0) { skip }"), ONE)
    with pytest.raises(LoopError):
        wlp_nowand(P("while (x = 0) { skip }"), ONE)


def test_freshness():
    c = P("x' := new(x); free(x''); y := <x'>")
    f = Q("S v': [x' |-> v'] * [v'' = y]")
    w = wlp(c, f)
    used = free_vars(f) | program_vars(c)
    for node in walk(w):
        if isinstance(node, (SupQuant, InfQuant)):
            assert node.var not in used


def test_nowand_mutate_rule():
    got = wlp_nowand(P("<x> := 1"), Q("[x |-> 1] * [y |-> z]"))
    assert equivalent(got, QStar(valid("x"), Q("[y |-> z]"))) is None
    assert not any(isinstance(n, GuardedWand) for n in walk(got))


def test_nowand_alloc_rule():
    assert wlp_nowand(P("x := new(y)"), Q("[x |-> y] * [z |-> z]")) == Q("[z |-> z]")


def test_nowand_without_matching_shape():
    assert wlp_nowand(P("x := new(y)"), Q("[emp]")) is None


def test_swap_nowand_form():
    got = wlp_nowand(P(SWAP), Q(SWAP_POST))
    assert isinstance(got, ConvexSum) and got.p == F(999, 1000)
    assert got.left == Q("[x |-> z2] * [y |-> z1]")


def test_swap_lower_bound():
    d = Domain(values=range(5), locations=(1, 2, 3), max_heap_cells=3)
    assert entails_oracle(Q(SWAP_PRE), wlp(P(SWAP), Q(SWAP_POST)), d).entails


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(BASE_STATEMENTS))
def test_nowand_entails_wlp(seed, kind):
    g = gen(seed, names=("x", "y"))
    c = g.base_statement(kind)
    f = g.qsh(1, depth=2)
    low = wlp_nowand(c, f)
    if low is not None:
        d = Domain(max_heap_cells=2)
        assert entails_oracle(low, wlp(c, f), d).entails


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(BASE_STATEMENTS))
def test_operational_soundness(seed, kind):
    g = gen(seed, names=("x", "y"))
    c = g.base_statement(kind)
    f = g.qsl(1, depth=2)
    assert operational_mismatch(c, f, wlp(c, f), Domain(max_heap_cells=2)) is None


def test_operational_soundness_on_swap():
    c, f = P(SWAP), Q(SWAP_POST)
    d = Domain(values=range(5), locations=(1, 2), max_heap_cells=2)
    assert operational_mismatch(c, f, wlp(c, f), d) is None


def test_closure_of_swap():
    assert check_closure(P(SWAP), QSH_REGISTRY) == []


def test_closure_guard_outside_registry():
    reg = type(QSH_REGISTRY)("tiny", frozenset({"pto", "true", "false"}))
    out = check_closure(P("if (x = y) {skip} else {skip}"), reg)
    assert [v.condition for v in out] == [2]


def test_closure_of_skip():
    assert check_closure(Skip(), FULL_REGISTRY) == []


def test_eqsh_closure_without_allocation():
    c = P("x := <y>; <y> := x; free(z)")
    f = Q("[y |-> x] * [z |-> z]")
    assert is_eqsh(f) and is_eqsh(wlp(c, f))
    assert not is_eqsh(wlp(P("x := new(y)"), f))


def test_populate_list_obligation():
    inv, loop = Q(POPULATE_INV), P(POPULATE_LOOP)
    f = Q(A2)
    lhs, rhs = invariant_check(inv, loop.guard, loop.body, f)
    assert lhs == inv
    assert rhs == BoolChoice(complement(loop.guard), f, wlp(loop.body, inv))
    assert entails_oracle(lhs, rhs).entails
    assert check(plan(lhs, rhs), OracleBackend()).status == "entails"


def test_invariant_with_skip_body():
    inv = Q("[x = 0]")
    lhs, rhs = invariant_check(inv, Q("[x = x]").atom, Skip(), inv)
    assert check(plan(lhs, rhs), OracleBackend()).status == "entails"
