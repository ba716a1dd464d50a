from fractions import Fraction as F

from hypothesis import given, settings, strategies as st

from qslcheck.atleast import atleast
from qslcheck.evalset import evalset_bound
from qslcheck.fuzz import random_pair
from qslcheck.reduction import OracleBackend, check, differential, entails, plan
from qslcheck.semantics import Verdict
from qslcheck.syntax import EMP, TRUE, Iverson
from qslcheck.text import parse_qsl

from helpers import U1, U2, gen


def test_running_example_plan():
    f, g = parse_qsl(U1), parse_qsl(U2)
    full = plan(f, g, omit_zero=False)
    assert [o.alpha for o in full.obligations] == [0, F(2, 5), F(3, 5), 1]
    assert len(plan(f, g).obligations) == 3
    for o in full.obligations:
        assert o.lhs == atleast(o.alpha, f) and o.rhs == atleast(o.alpha, g)


def test_running_example_holds():
    res = check(plan(parse_qsl(U1), parse_qsl(U2)), OracleBackend())
    assert res.status == "entails" and len(res.results) == 3


def test_plan_of_identical_sides():
    f = parse_qsl(U1)
    assert all(o.lhs == o.rhs for o in plan(f, f).obligations)


def test_true_not_below_emp():
    res = entails(Iverson(TRUE), Iverson(EMP))
    assert res.status == "fails" and res.failing_alpha == 1
    assert res.verdict.counterexample.heap


def test_emp_below_true():
    d = differential(Iverson(EMP), Iverson(TRUE))
    assert d.agree and d.oracle == "entails"


class Scripted:
    name = "scripted"

    def __init__(self, answers):
        self.answers = list(answers)

    def sl_entails(self, lhs, rhs):
        return Verdict(self.answers.pop(0))


def test_fail_fast_and_exhaustive():
    p = plan(parse_qsl(U1), parse_qsl(U2))
    res = check(p, Scripted(["fails", "entails", "entails"]))
    assert res.status == "fails" and len(res.results) == 1
    res = check(p, Scripted(["fails", "entails", "entails"]), all_obligations=True)
    assert len(res.results) == 3 and res.failing_alpha == F(2, 5)


def test_verdict_ranking():
    p = plan(parse_qsl(U1), parse_qsl(U2))
    assert check(p, Scripted(["unknown", "error", "entails"])).status == "error"
    assert check(p, Scripted(["entails", "unknown", "entails"])).status == "unknown"


def test_metrics():
    m = plan(parse_qsl(U1), parse_qsl(U2)).metrics()
    assert m["evalset_size"] == 4 and m["obligations"] == 3
    assert m["max_lhs_size"] <= m["lhs_size_bound"]


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6))
def test_reduction_agrees_with_oracle(seed):
    f, g = random_pair(gen(seed), 3)
    assert differential(f, g).agree


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_zero_omission_never_changes_verdict(seed):
    f, g = random_pair(gen(seed), 2)
    b = OracleBackend()
    assert check(plan(f, g), b).status == check(plan(f, g, omit_zero=False), b).status


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_obligation_count_bound(seed):
    f, g = random_pair(gen(seed), 3)
    assert len(plan(f, g, omit_zero=False).obligations) <= evalset_bound(f)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_verdict_independent_of_order(seed):
    f, g = random_pair(gen(seed), 2)
    p = plan(f, g)
    flipped = type(p)(p.f, p.g, p.evalset, tuple(reversed(p.obligations)))
    b = OracleBackend()
    assert check(p, b).status == check(flipped, b).status
