"""Entailment checking for quantitative separation logic.

The main entry points are re-exported here; see the submodules for the
full API.
"""

from qslcheck.atleast import atleast, eliminate_true, size_bound
from qslcheck.errors import QslError
from qslcheck.evalset import EvalSet, evalset
from qslcheck.reduction import OracleBackend, check, entails, plan
from qslcheck.semantics import DEFAULT_DOMAIN, Domain, State, Verdict, entails_oracle, eval_qsl, eval_sl
from qslcheck.text import parse_program, parse_qsl, parse_sl, to_text
from qslcheck.wlp import invariant_check, wlp, wlp_nowand

__all__ = [
    "DEFAULT_DOMAIN", "Domain", "EvalSet", "OracleBackend", "QslError", "State", "Verdict",
    "atleast", "check", "eliminate_true", "entails", "entails_oracle", "eval_qsl", "eval_sl",
    "evalset", "invariant_check", "parse_program", "parse_qsl", "parse_sl", "plan",
    "size_bound", "to_text", "wlp", "wlp_nowand",
]
