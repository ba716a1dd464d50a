"""JSON report envelope and the fuzz report files (CSV plus figure)."""

from __future__ import annotations

import csv
import hashlib
import json
import os
from fractions import Fraction
from typing import Iterable, Sequence

SCHEMA_VERSION = 1

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "qslcheck report",
    "type": "object",
    "required": ["schema_version", "command", "inputs", "domain", "result"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "command": {"type": "string"},
        "inputs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["path", "sha256"],
                "properties": {
                    "path": {"type": "string"},
                    "sha256": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
                },
            },
        },
        "domain": {
            "type": "object",
            "required": ["values", "locations", "max_heap_cells", "k"],
            "properties": {
                "values": {"type": "array", "items": {"type": "integer"}},
                "locations": {"type": "array", "items": {"type": "integer"}},
                "max_heap_cells": {"type": "integer", "minimum": 0},
                "k": {"type": "integer", "minimum": 1},
            },
        },
        "seed": {"type": ["integer", "null"]},
        "bounded": {"type": "boolean"},
        "verdict": {"enum": ["entails", "fails", "unknown", "error"]},
        "obligations": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["alpha", "result", "lhs_size", "rhs_size"],
                "properties": {
                    "alpha": {"type": "string"},
                    "result": {"enum": ["entails", "fails", "unknown", "error"]},
                    "lhs_size": {"type": "integer"},
                    "rhs_size": {"type": "integer"},
                },
            },
        },
        "metrics": {"type": "object"},
        "result": {},
        "timing": {"type": "object"},
    },
    "additionalProperties": False,
}


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def jsonable(x):
    """Fractions become ``n/m`` strings; containers are converted recursively."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    return x


def dumps(report: dict) -> str:
    return json.dumps(jsonable(report), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Fuzz report

FUZZ_COLUMNS = (
    "case", "psize", "qsl_size", "evalset_size", "evalset_bound", "alpha",
    "atleast_size", "size_bound", "biconditional", "oracle", "reduced", "agree",
)


def write_fuzz_csv(rows: Sequence[dict], path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=FUZZ_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: jsonable(r[k]) for k in FUZZ_COLUMNS})


def plot_sizes(rows: Sequence[dict], path: str) -> None:
    """Two panels: evalset size and atleast size against their bounds."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.ticker import FuncFormatter, LogLocator, NullFormatter

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4), dpi=100)
    for ax, (x, y, label) in zip(
        (ax1, ax2),
        (("evalset_bound", "evalset_size", "|EvalSet(f)|"),
         ("size_bound", "atleast_size", "size of atleast(alpha, f)")),
    ):
        xs = [r[x] for r in rows]
        ys = [r[y] for r in rows]
        ax.scatter(xs, ys, s=12, alpha=0.6, color="tab:blue", label="cases")
        if xs:
            lo, hi = 1, max(max(xs), max(ys), 2)
            ax.plot([lo, hi], [lo, hi], color="tab:red", lw=1, label="bound")
        for axis, scale in ((ax.xaxis, ax.set_xscale), (ax.yaxis, ax.set_yscale)):
            scale("log", base=2)
            axis.set_major_locator(LogLocator(base=2))
            axis.set_major_formatter(FuncFormatter(lambda v, _: f"{v:g}"))
            axis.set_minor_formatter(NullFormatter())
        ax.set_xlabel("bound")
        ax.set_ylabel(label)
        ax.legend(loc="upper left", frameon=False)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def write_fuzz_report(rows: Sequence[dict], directory: str) -> dict[str, str]:
    os.makedirs(directory, exist_ok=True)
    paths = {
        "csv": os.path.join(directory, "fuzz.csv"),
        "figure": os.path.join(directory, "sizes.png"),
    }
    write_fuzz_csv(rows, paths["csv"])
    plot_sizes(rows, paths["figure"])
    return paths


def summarize(rows: Iterable[dict]) -> dict:
    rows = list(rows)
    return {
        "cases": len(rows),
        "agreements": sum(1 for r in rows if r["agree"]),
        "biconditional_failures": sum(1 for r in rows if not r["biconditional"]),
        "bound_violations": sum(
            1 for r in rows
            if r["evalset_size"] > r["evalset_bound"] or r["atleast_size"] > r["size_bound"]
        ),
    }
