"""Run an SMT-LIB file through the cvc5 Python bindings (no binary needed)."""

import sys

import cvc5

tm = cvc5.TermManager()
solver = cvc5.Solver(tm)
solver.setOption("incremental", "false")
parser = cvc5.InputParser(solver)
parser.setFileInput(cvc5.InputLanguage.SMT_LIB_2_6, sys.argv[-1])
symbols = parser.getSymbolManager()
while True:
    cmd = parser.nextCommand()
    if cmd.isNull():
        break
    out = cmd.invoke(solver, symbols)
    if out:
        print(out, end="")
