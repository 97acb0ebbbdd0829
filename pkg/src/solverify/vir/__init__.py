"""Verification IR: a small Boogie-like language with maps, havoc,
assume/assert, procedures, and quantified allocation axioms, plus a textual
format and a reference interpreter used as a testing oracle."""

from solverify.vir.ast import (  # noqa: F401
    INT, BOOL, REF, MapType,
    BConst, Forall, IConst, NamedConst, Op, RConst, Select, UFApply, Var,
    Assert, Assign, Assume, Call, Havoc, If, IrProcedure, IrProgram, Seq,
    Skip, Store, While,
)
from solverify.vir.prelude import emit_prelude, mapinit_name  # noqa: F401
from solverify.vir.printer import print_ir  # noqa: F401
from solverify.vir.parser import parse_ir  # noqa: F401
from solverify.vir.interp import (  # noqa: F401
    AssertFailed, Blocked, BudgetExhausted, Completed, IrState,
    TapeExhausted, UnsupportedQuantifier, interpret,
)
