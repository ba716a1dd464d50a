from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from qslcheck.atleast import (
    atleast,
    check_size_bound,
    contains_true,
    correctness_check,
    eliminate_true,
    size_bound,
)
from qslcheck.evalset import evalset
from qslcheck.gen import alphas
from qslcheck.semantics import equivalent
from qslcheck.syntax import (
    TRUE,
    And,
    Iverson,
    Max,
    Min,
    Not,
    OneMinus,
    Or,
    QStar,
    Star,
    eq,
    pto,
)
from qslcheck.text import parse_qsl, parse_sl

from helpers import U1, ac_normal, gen


def test_star_at_one():
    f = QStar(Iverson(pto("x", "y")), Iverson(pto("y", "z")))
    assert atleast(1, f) == Star(pto("x", "y"), pto("y", "z"))


def test_running_example_at_half():
    got = atleast(F(1, 2), parse_qsl(U1))
    want = parse_sl("(x |-> y * y |-> z & x |-> y) | x |-> y")
    assert ac_normal(got) == ac_normal(want)


def test_running_example_disjunct_order():
    # (beta, gamma) pairs in lexicographic order: (0, 1) then (1, 1)
    got = atleast(F(1, 2), parse_qsl(U1))
    assert got == Or(pto("x", "y"), And(Star(pto("x", "y"), pto("y", "z")), pto("x", "y")))


@pytest.mark.parametrize("text", [U1, "[emp]", "1 - [x = y]", "S v: [x |-> v]"])
def test_alpha_zero_is_true(text):
    assert atleast(0, parse_qsl(text)) == TRUE


def test_one_minus_at_one():
    b = eq("x", "y")
    assert atleast(1, OneMinus(Iverson(b))) == Not(b)
    assert correctness_check(1, OneMinus(Iverson(b))) is None


def test_max_min_are_disjunction_and_conjunction():
    g, u = Iverson(pto("x", "y")), Iverson(eq("x", "y"))
    assert atleast(1, Max(g, u)) == Or(atleast(1, g), atleast(1, u))
    assert atleast(1, Min(g, u)) == And(atleast(1, g), atleast(1, u))


def test_alpha_out_of_range():
    with pytest.raises(ValueError):
        atleast(F(3, 2), parse_qsl(U1))


def test_raw_construction_keeps_true():
    raw = atleast(F(1, 2), parse_qsl(U1), true_elim=False)
    assert contains_true(raw)
    assert equivalent(raw, atleast(F(1, 2), parse_qsl(U1))) is None


def test_eliminate_true_examples():
    assert eliminate_true(And(TRUE, pto("x", "y"))) == pto("x", "y")
    assert eliminate_true(Star(TRUE, TRUE)) == TRUE
    assert eliminate_true(Star(TRUE, pto("x", "y"))) == Star(TRUE, pto("x", "y"))


def test_running_example_biconditional():
    assert correctness_check(F(1, 2), parse_qsl(U1)) is None


def _case(seed, p):
    g = gen(seed)
    f = g.qsl(p)
    return f, alphas(f, g.rng, list(evalset(f)))


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 3))
def test_biconditional(seed, p):
    f, a = _case(seed, p)
    assert correctness_check(a, f) is None


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 3))
def test_size_bound(seed, p):
    f, a = _case(seed, p)
    assert check_size_bound(f, atleast(a, f))
    assert check_size_bound(f, atleast(a, f, true_elim=False))
    assert size_bound(f) > 0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 3))
def test_true_elimination_is_equivalent(seed, p):
    f, a = _case(seed, p)
    raw = atleast(a, f, true_elim=False)
    assert equivalent(raw, eliminate_true(raw)) is None
    assert equivalent(raw, atleast(a, f)) is None


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 3))
def test_true_only_when_whole_formula_is_true(seed, p):
    f = gen(seed, names=("x", "y")).qsl(p, kinds=("false", "eq", "neq", "emp", "pto"))
    for a in evalset(f):
        out = atleast(a, f)
        assert out == TRUE or not contains_true(out)
