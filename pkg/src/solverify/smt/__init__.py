"""SMT-LIB2 plumbing: script model, a pure-Python fallback solver for the
query fragment the pipeline emits, and the subprocess client."""

from solverify.smt.terms import Script, Term, parse_script, sexpr  # noqa: F401
from solverify.smt.solver import solve_script  # noqa: F401
