"""Command-line entry point: ``qslcheck <command> ...``.

Exit codes: 0 entails or success, 1 fails, 2 unknown, 3 error,
64 usage or input error, 70 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from fractions import Fraction
from typing import Sequence

from qslcheck import fragments
from qslcheck.atleast import atleast, size_bound
from qslcheck.errors import QslError
from qslcheck.evalset import evalset, evalset_bound
from qslcheck.fuzz import run_fuzz
from qslcheck.reduction import OracleBackend, check, plan
from qslcheck.report import SCHEMA_VERSION, dumps, sha256_text, summarize, write_fuzz_report
from qslcheck.semantics import Domain
from qslcheck.smt import SmtBackend, SmtConfig, emit_many, run
from qslcheck.syntax import Program, While, psize, qsl_size, sl_size
from qslcheck.text import parse_prob, parse_program, parse_qsl, parse_sl, to_text
from qslcheck.wlp import QSH_REGISTRY, check_closure, invariant_check, wlp, wlp_nowand

log = logging.getLogger("qslcheck")

EXIT = {"entails": 0, "fails": 1, "unknown": 2, "error": 3}
EX_USAGE = 64
EX_SOFTWARE = 70


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits with 2 by default
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# Inputs


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


class Context:
    """Parsed global options plus the inputs read so far."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.domain = Domain(args.values, args.locs, args.max_cells, args.k)
        self.inputs: list[dict] = []

    def load(self, path: str, kind: str):
        text = _read(path)
        self.inputs.append({"path": path, "sha256": sha256_text(text)})
        parser = {"sl": parse_sl, "qsl": parse_qsl, "program": parse_program}[kind]
        return parser(text, self.domain.k)

    def report(self, command: str, result, **extra) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "inputs": self.inputs,
            "domain": self.domain.to_json(),
            "seed": self.args.seed,
            "result": result,
        }
        out.update(extra)
        return out

    def solver_cfg(self) -> SmtConfig:
        a = self.args
        return SmtConfig(dialect=a.dialect, solver_cmd=a.solver_cmd, timeout=a.timeout)


def _int_list(text: str) -> tuple[int, ...]:
    """``0..4`` or ``0,1,2``."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return tuple(range(int(lo), int(hi) + 1))
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a range a..b or a comma list, got {text!r}")


def _alpha(text: str) -> Fraction:
    try:
        return parse_prob(text)
    except QslError as exc:
        raise argparse.ArgumentTypeError(str(exc))


# ---------------------------------------------------------------------------
# Commands; each returns (exit code, report dict, text lines)


def cmd_parse(ctx: Context):
    x = ctx.load(ctx.args.file, ctx.args.kind)
    info = {"kind": ctx.args.kind, "text": to_text(x)}
    if ctx.args.kind == "qsl":
        info.update(size=qsl_size(x), psize=psize(x))
    elif ctx.args.kind == "sl":
        info.update(size=sl_size(x))
    return 0, ctx.report("parse", info), [info["text"]]


def cmd_evalset(ctx: Context):
    f = ctx.load(ctx.args.file, "qsl")
    es = evalset(f)
    res = {"members": list(es), "size": len(es), "bound": evalset_bound(f)}
    lines = [str(a) for a in es] + [f"size {len(es)}", f"bound {evalset_bound(f)}"]
    return 0, ctx.report("evalset", res), lines


def cmd_atleast(ctx: Context):
    f = ctx.load(ctx.args.file, "qsl")
    a = atleast(ctx.args.alpha, f, true_elim=not ctx.args.no_true_elim)
    res = {"alpha": ctx.args.alpha, "formula": to_text(a), "size": sl_size(a),
           "size_bound": size_bound(f)}
    return 0, ctx.report("atleast", res), [res["formula"]]


def _backend(ctx: Context):
    if ctx.args.backend == "smt":
        return SmtBackend(ctx.solver_cfg())
    return OracleBackend(ctx.domain)


def _discharge(ctx: Context, command: str, f, g, extra: dict | None = None):
    p = plan(f, g, omit_zero=not ctx.args.keep_zero)
    res = check(p, _backend(ctx), all_obligations=ctx.args.all)
    obligations = [
        {"alpha": ob.alpha, "result": v.status, "lhs_size": sl_size(ob.lhs),
         "rhs_size": sl_size(ob.rhs)}
        for ob, v in res.results
    ]
    payload = {"backend": ctx.args.backend, "failing_alpha": res.failing_alpha}
    if res.verdict.counterexample is not None:
        payload["counterexample"] = res.verdict.counterexample.to_json()
    if res.verdict.reason:
        payload["reason"] = res.verdict.reason
    payload.update(extra or {})
    lines = [f"alpha {ob['alpha']}: {ob['result']}" for ob in obligations]
    bounded = ctx.args.backend == "oracle"
    note = ", bounded" if bounded else ""
    lines.append(f"verdict: {res.status} ({len(p.obligations)} obligations{note})")
    if "counterexample" in payload:
        lines.append("counterexample: " + json.dumps(payload["counterexample"], sort_keys=True))
    rep = ctx.report(command, payload, verdict=res.status, obligations=obligations,
                     metrics=p.metrics(), bounded=bounded)
    return EXIT[res.status], rep, lines


def cmd_check(ctx: Context):
    f = ctx.load(ctx.args.lhs, "qsl")
    g = ctx.load(ctx.args.rhs, "qsl")
    return _discharge(ctx, "check", f, g)


def cmd_wlp(ctx: Context):
    c = ctx.load(ctx.args.program, "program")
    f = ctx.load(ctx.args.post, "qsl")
    k = ctx.domain.k
    pre = wlp_nowand(c, f, k=k) if ctx.args.no_wand else None
    rule = "nowand" if pre is not None else "wlp"
    if pre is None:
        pre = wlp(c, f, k=k)
    violations = [{"condition": v.condition, "message": v.message}
                  for v in check_closure(c, QSH_REGISTRY)]
    res = {"pre": to_text(pre), "rules": rule, "closure_violations": violations,
           "eqsh": fragments.is_eqsh(pre)}
    return 0, ctx.report("wlp", res), [res["pre"]]


def cmd_invariant(ctx: Context):
    inv = ctx.load(ctx.args.inv, "qsl")
    c = ctx.load(ctx.args.program, "program")
    post = ctx.load(ctx.args.post, "qsl")
    if not isinstance(c, While):
        raise UsageError("invariant-check needs a program that is a single while loop")
    lhs, rhs = invariant_check(inv, c.guard, c.body, post, k=ctx.domain.k)
    return _discharge(ctx, "invariant-check", lhs, rhs, {"obligation": to_text(rhs)})


def cmd_fragment(ctx: Context):
    f = ctx.load(ctx.args.file, "qsl")
    res = {"qsh": fragments.is_qsh(f), "eqsh": fragments.is_eqsh(f),
           "capabilities": fragments.required_capabilities(f).to_json()}
    caps = res["capabilities"]
    lines = [f"qsh: {str(res['qsh']).lower()}", f"eqsh: {str(res['eqsh']).lower()}",
             "atoms: " + " ".join(caps["atoms"]),
             "connectives: " + " ".join(caps["connectives"])]
    return 0, ctx.report("fragment", res), lines


def cmd_prenex(ctx: Context):
    a = ctx.load(ctx.args.file, "sl")
    out = to_text(fragments.prenex(a))
    return 0, ctx.report("prenex", {"formula": out}), [out]


def cmd_emit(ctx: Context):
    kind = "qsl" if ctx.args.from_qsl else "sl"
    lhs = ctx.load(ctx.args.lhs, kind)
    rhs = ctx.load(ctx.args.rhs, kind)
    if ctx.args.from_qsl:
        pairs = [(ob.lhs, ob.rhs) for ob in plan(lhs, rhs).obligations]
    else:
        pairs = [(lhs, rhs)]
    cfg = ctx.solver_cfg()
    job = emit_many(pairs, cfg)
    if ctx.args.output and ctx.args.output != "-":
        with open(ctx.args.output, "w") as fh:
            fh.write(job.script)
        lines = [f"wrote {ctx.args.output}"]
    else:
        lines = job.script.rstrip("\n").splitlines()
    res = {"dialect": cfg.dialect, "logic": cfg.logic_name, "obligations": len(pairs),
           "script_sha256": sha256_text(job.script)}
    code = 0
    extra = {}
    if ctx.args.run:
        v = run(job, cfg)
        code = EXIT[v.status]
        extra["verdict"] = v.status
        if v.reason:
            res["reason"] = v.reason
        lines.append(f"verdict: {v.status}")
    return code, ctx.report("emit-smt", res, **extra), lines


def cmd_fuzz(ctx: Context):
    a = ctx.args
    seed = 0 if a.seed is None else a.seed
    rows = run_fuzz(a.n, a.max_psize, seed, ctx.domain)
    summary = summarize(rows)
    lines = [f"{summary['agreements']}/{summary['cases']} agreements",
             f"bound violations: {summary['bound_violations']}"]
    if a.report_dir:
        paths = write_fuzz_report(rows, a.report_dir)
        summary["files"] = paths
        lines += [f"wrote {paths['csv']}", f"wrote {paths['figure']}"]
    ok = summary["agreements"] == summary["cases"] and summary["bound_violations"] == 0
    rep = ctx.report("fuzz", summary, verdict="entails" if ok else "fails", bounded=True)
    return (0 if ok else 1), rep, lines


# ---------------------------------------------------------------------------
# Argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--values", type=_int_list, default=argparse.SUPPRESS,
                   help="value universe, e.g. 0..3 (default 0..3)")
    g.add_argument("--locs", type=_int_list, default=argparse.SUPPRESS,
                   help="allocatable locations, e.g. 1..3 (default 1..3)")
    g.add_argument("--max-cells", type=int, default=argparse.SUPPRESS,
                   help="largest heap enumerated (default 3)")
    g.add_argument("--k", type=int, default=argparse.SUPPRESS, help="record width (default 1)")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    g.add_argument("--timeout", type=float, default=argparse.SUPPRESS,
                   help="solver timeout in seconds (default 60)")
    g.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                   help="print a JSON report instead of text")
    g.add_argument("--timing", action="store_true", default=argparse.SUPPRESS,
                   help="add wall-clock timing to the JSON report")
    g.add_argument("--config", default=argparse.SUPPRESS,
                   help="JSON file with defaults for any long option")
    g.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)

    p = _Parser(prog="qslcheck", parents=[common],
                description="Entailment checking for quantitative separation logic.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        s = sub.add_parser(name, parents=[common], help=help_)
        s.set_defaults(func=fn)
        return s

    def checking(s):
        s.add_argument("--backend", choices=("oracle", "smt"), default="oracle")
        s.add_argument("--all", action="store_true", help="check every obligation")
        s.add_argument("--keep-zero", action="store_true",
                       help="also emit the trivial alpha = 0 obligation")
        solver(s)

    def solver(s):
        s.add_argument("--dialect", choices=("cvc-classic", "cvc-modern"), default="cvc-classic")
        s.add_argument("--solver-cmd", default=None, help="overrides QSL_SOLVER_CMD")

    s = add("parse", cmd_parse, "parse and pretty-print a file")
    s.add_argument("file")
    s.add_argument("--kind", choices=("sl", "qsl", "program"), default="qsl")

    s = add("evalset", cmd_evalset, "print the evaluation set of a QSL formula")
    s.add_argument("file")

    s = add("atleast", cmd_atleast, "print the SL formula for alpha <= f")
    s.add_argument("file")
    s.add_argument("--alpha", type=_alpha, required=True)
    s.add_argument("--no-true-elim", action="store_true")

    s = add("check", cmd_check, "decide lhs |= rhs for QSL formulas")
    s.add_argument("lhs")
    s.add_argument("rhs")
    checking(s)

    s = add("wlp", cmd_wlp, "weakest liberal preexpectation of a loop-free program")
    s.add_argument("program")
    s.add_argument("post")
    s.add_argument("--no-wand", action="store_true",
                   help="try the wand-free rules first")

    s = add("invariant-check", cmd_invariant, "check a loop invariant")
    s.add_argument("inv")
    s.add_argument("program")
    s.add_argument("post")
    checking(s)

    s = add("fragment", cmd_fragment, "fragment membership and required SL constructs")
    s.add_argument("file")

    s = add("prenex", cmd_prenex, "prenex form of an S1/S2 SL formula")
    s.add_argument("file")

    s = add("emit-smt", cmd_emit, "write an SMT-LIB query for lhs |= rhs")
    s.add_argument("lhs")
    s.add_argument("rhs")
    s.add_argument("-o", "--output", default="-")
    s.add_argument("--from-qsl", action="store_true",
                   help="inputs are QSL; emit every reduced obligation in one query")
    s.add_argument("--run", action="store_true", help="also run the solver")
    solver(s)

    s = add("fuzz", cmd_fuzz, "differential testing against the bounded oracle")
    s.add_argument("--n", type=int, default=100)
    s.add_argument("--max-psize", type=int, default=3)
    s.add_argument("--report-dir", default=None, help="write fuzz.csv and sizes.png here")
    return p


DEFAULTS = {
    "values": (0, 1, 2, 3), "locs": (1, 2, 3), "max_cells": 3, "k": 1, "seed": None,
    "timeout": 60.0, "json": False, "timing": False, "verbose": 0,
}

_CONFIG_TYPES = {"values": tuple, "locs": tuple}


def _resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Command line over config file over built-in defaults."""
    merged = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            cfg = json.loads(_read(args.config))
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError(f"config {args.config}: expected a JSON object")
        for key, val in cfg.items():
            key = key.replace("-", "_")
            if key in _CONFIG_TYPES and isinstance(val, list):
                val = _CONFIG_TYPES[key](val)
            merged[key] = val
    for key, val in vars(args).items():
        merged[key] = val
    return argparse.Namespace(**merged)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _resolve(args)
        level = logging.WARNING - 10 * min(args.verbose, 2)
        logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
        ctx = Context(args)
        start = time.perf_counter()
        code, rep, lines = args.func(ctx)
        elapsed = time.perf_counter() - start
    except (UsageError, QslError) as exc:
        print(f"qslcheck: error: {exc}", file=sys.stderr)
        return EX_USAGE
    except Exception as exc:  # pragma: no cover - reported, never expected
        log.exception("internal error")
        print(f"qslcheck: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EX_SOFTWARE
    if args.json:
        if args.timing:
            rep["timing"] = {"seconds": round(elapsed, 6)}
        sys.stdout.write(dumps(rep))
    else:
        for line in lines:
            print(line)
    return code


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
