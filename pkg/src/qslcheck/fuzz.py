"""Differential fuzzing: atleast and the reduction against the bounded oracle."""

from __future__ import annotations

import logging
import random

from qslcheck.atleast import atleast, correctness_check, size_bound
from qslcheck.evalset import evalset, evalset_bound
from qslcheck.gen import Gen, alphas
from qslcheck.reduction import differential
from qslcheck.semantics import DEFAULT_DOMAIN, Domain
from qslcheck.syntax import Max, Min, QslFormula, psize, qsl_size, sl_size

log = logging.getLogger(__name__)


def random_pair(gen: Gen, max_psize: int) -> tuple[QslFormula, QslFormula]:
    """A pair with ``psize <= max_psize`` on both sides, biased towards entailment."""
    rng = gen.rng
    mode = rng.randrange(4)
    a = rng.randint(0, max_psize)
    # Min and Max combine both sides, so they share one psize budget.
    b = rng.randint(0, max_psize - a) if mode < 2 else rng.randint(0, max_psize)
    f = gen.qsl(a)
    g = gen.qsl(b)
    if mode == 0:
        return Min(f, g), f
    if mode == 1:
        return f, Max(f, g)
    if mode == 2:
        return f, f
    return f, g


def fuzz_case(index: int, gen: Gen, max_psize: int, domain: Domain) -> dict:
    f, g = random_pair(gen, max_psize)
    es = evalset(f)
    alpha = alphas(f, gen.rng, list(es))
    formula = atleast(alpha, f)
    bicond = correctness_check(alpha, f, domain, formula) is None
    d = differential(f, g, domain)
    return {
        "case": index,
        "psize": psize(f),
        "qsl_size": qsl_size(f),
        "evalset_size": len(es),
        "evalset_bound": evalset_bound(f),
        "alpha": alpha,
        "atleast_size": sl_size(formula),
        "size_bound": size_bound(f),
        "biconditional": bicond,
        "oracle": d.oracle,
        "reduced": d.reduced,
        "agree": bicond and d.agree,
    }


def run_fuzz(n: int, max_psize: int = 3, seed: int = 0,
             domain: Domain = DEFAULT_DOMAIN) -> list[dict]:
    """``n`` cases from one seeded stream; the result is deterministic in ``seed``."""
    log.info("fuzz: n=%d max_psize=%d seed=%d", n, max_psize, seed)
    gen = Gen(random.Random(seed), domain=domain)
    return [fuzz_case(i, gen, max_psize, domain) for i in range(n)]
