"""Transaction-bounded checking by harness unrolling."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from solverify.engine.queries import vc_gen
from solverify.engine.smtio import check_smt
from solverify.engine.trace import CounterexampleTrace, extract_trace
from solverify.engine.unroll import unroll_harness
from solverify.translate import HarnessInfo, Translation
from solverify.vir import ast as I


@dataclass
class Domains:
    """Optional finitization: restrict havoc'd harness inputs to small
    domains (integer arguments by value; senders to a fixed id pool)."""

    int_args: list[int] = field(default_factory=list)
    senders: list[int] = field(default_factory=list)

    def sender_pool(self) -> list[int]:
        return self.senders


def _restrict(stmt: I.IrStmt, hinfo: HarnessInfo, domains: Domains,
              local_types: dict[str, I.IrType]) -> I.IrStmt:
    """Insert assumes after havocs of harness inputs, pinning them to the
    domain values."""
    arg_bases = {a for a in hinfo.ctor_args}
    for _, _, _, arg_vars in hinfo.branches:
        arg_bases.update(arg_vars)
    sender_bases = {hinfo.ctor_sender, hinfo.sender_var}

    def base_name(v: str) -> str:
        return v.split("$", 1)[0]

    def dom_assume(var: str) -> I.IrStmt | None:
        base = base_name(var)
        ty = local_types.get(base)
        if base in sender_bases and domains.senders:
            return I.Assume(I.disj(*[I.op("==", I.Var(var), I.RConst(s))
                                     for s in domains.senders]))
        if base in arg_bases and ty == I.INT and domains.int_args:
            return I.Assume(I.disj(*[I.op("==", I.Var(var), I.IConst(v))
                                     for v in domains.int_args]))
        if base in arg_bases and ty == I.REF and domains.senders:
            return I.Assume(I.disj(*[I.op("==", I.Var(var), I.RConst(s))
                                     for s in domains.senders] + [
                I.op("==", I.Var(var), I.RConst(0))]))
        return None

    def walk(s: I.IrStmt) -> I.IrStmt:
        if isinstance(s, I.Seq):
            out = []
            for x in s.stmts:
                out.append(walk(x))
            return I.seq(*out)
        if isinstance(s, I.If):
            return I.If(s.cond, walk(s.then), walk(s.els))
        if isinstance(s, I.Havoc):
            extra = dom_assume(s.var)
            if extra is not None:
                return I.seq(s, extra)
            return s
        return s

    return walk(stmt)


@dataclass
class BmcOutcome:
    trace: CounterexampleTrace | None
    k_reached: int
    seconds: float
    statuses: list[str] = field(default_factory=list)

    def safe_bound(self) -> int:
        """Transactions proven safe: the consecutive unsat prefix.  Unknown
        answers end the provable range."""
        bound = 0
        for status in self.statuses:
            if status != "unsat":
                break
            bound += 1
        return bound


def bounded_check(tr: Translation, hinfo: HarnessInfo, k_max: int,
                  solver_path: str | None = None, timeout: float = 600.0,
                  loop_unroll: int = 8, domains: Domains | None = None,
                  dump_dir: str | None = None) -> BmcOutcome:
    """Search for a failing transaction sequence of length up to k_max."""
    start = time.monotonic()
    harness = tr.ir.procedures[hinfo.proc]
    local_types = dict(harness.params + harness.returns + harness.locals)
    statuses = []
    for k in range(1, k_max + 1):
        unrolled = unroll_harness(tr.ir, harness, k, loop_unroll=loop_unroll)
        if domains is not None:
            unrolled = I.IrProcedure(
                name=unrolled.name, params=unrolled.params,
                returns=unrolled.returns, locals=unrolled.locals,
                body=_restrict(unrolled.body, hinfo, domains, local_types))
        _, query = vc_gen(tr.ir, unrolled, initial_alloc=True)
        if dump_dir is not None:
            import os
            os.makedirs(dump_dir, exist_ok=True)
            with open(os.path.join(dump_dir, f"main_bmc_{k}.smt2"), "w") as fh:
                fh.write(query.text)
        result = check_smt(query, timeout=timeout, solver_path=solver_path)
        statuses.append(result.status)
        if result.status == "sat":
            trace = extract_trace(result, query, unrolled, hinfo, tr, k)
            return BmcOutcome(trace=trace, k_reached=k,
                              seconds=time.monotonic() - start,
                              statuses=statuses)
    return BmcOutcome(trace=None, k_reached=k_max,
                      seconds=time.monotonic() - start, statuses=statuses)
