"""Shared fixtures-as-functions for the test suite."""

from __future__ import annotations

import random

from qslcheck.gen import Gen
from qslcheck.syntax import And, Atom, Exists, Forall, Not, Or, Star, Wand
from qslcheck.text import parse_program, parse_qsl

U1 = "0.4 * ([x |-> y] * [y |-> z]) + 0.6 * [x |-> y]"
U2 = "0.6 * ([x |-> y] * [true])"
SWAP = "tmp1 := <x>; tmp2 := <y>; {<x> := tmp2} [0.999] {<x> := 4}; <y> := tmp1"
SWAP_POST = "[x |-> z1] * [y |-> z2]"
SWAP_PRE = "0.999 * ([x |-> z2] * [y |-> z1]) + (1-0.999) * [false]"

A2 = "(S y: S z: [x |-> y] * [y |-> z] * [ls(z, 0)])"
A1 = "(S y: [x |-> y] * [ls(y, 0)])"
A0 = "[ls(x, 0)]"
POPULATE_INV = f"[c = 0] * {A2} + [c != 0] * (0.5 * {A2} + 0.5 * (0.5 * {A1} + 0.5 * {A0}))"
POPULATE_LOOP = "while (c != 0) { {c := 0} [0.5] {x := new(x)} }"


def u1():
    return parse_qsl(U1)


def u2():
    return parse_qsl(U2)


def swap():
    return parse_program(SWAP)


def gen(seed: int, **kw) -> Gen:
    return Gen(random.Random(seed), **kw)


def ac_normal(a):
    """SL formula modulo associativity and commutativity of &, | and *."""
    if isinstance(a, Atom):
        return ("atom", a.kind, a.args)
    for cls, tag in ((And, "and"), (Or, "or"), (Star, "star")):
        if isinstance(a, cls):
            items = []

            def flat(x):
                if isinstance(x, cls):
                    flat(x.left)
                    flat(x.right)
                else:
                    items.append(ac_normal(x))

            flat(a)
            return (tag, tuple(sorted(items, key=repr)))
    if isinstance(a, Not):
        return ("not", ac_normal(a.arg))
    if isinstance(a, (Exists, Forall)):
        return (type(a).__name__, a.var, ac_normal(a.body))
    if isinstance(a, Wand):
        return ("wand", ac_normal(a.left), ac_normal(a.right))
    raise TypeError(a)


def sl_normal(a):
    """``ac_normal`` plus idempotence of & and |, and the unit laws for false/true."""
    n = ac_normal(a)
    return _units(n)


def _units(n):
    tag = n[0]
    if tag in ("and", "or", "star"):
        items = [_units(x) for x in n[1]]
        flat = []
        for x in items:
            flat.extend(x[1] if x[0] == tag else [x])
        if tag == "star":
            return (tag, tuple(sorted(flat, key=repr)))
        unit = ("atom", "true" if tag == "and" else "false", ())
        flat = sorted({x for x in flat if x != unit}, key=repr)
        if not flat:
            return unit
        if len(flat) == 1:
            return flat[0]
        return (tag, tuple(flat))
    if tag == "not":
        return ("not", _units(n[1]))
    if tag in ("Exists", "Forall"):
        return (tag, n[1], _units(n[2]))
    if tag == "wand":
        return ("wand", _units(n[1]), _units(n[2]))
    return n
