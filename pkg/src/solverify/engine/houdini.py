"""Contract-invariant inference by iterative candidate weakening.

Start from the full candidate pool conjoined; each round discharges, per
procedure, a query asking whether some execution from a state satisfying the
remaining conjunction (the constructor runs from an arbitrary state) ends in
a state violating one of them.  Counterexample models name the violated
candidates, which are removed in a batch per round; the loop stops when a
round removes nothing, in at most one round per candidate.

During inference, assertions inside bodies block the execution like
assumptions (the fixpoint is over non-failing executions); a final pass
re-checks every body assertion under the inferred conjunction and yields the
all-asserts-verified flag.  A solver `unknown` refutes the candidate under
check, which can only weaken the result, never unsoundly strengthen it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from solverify.engine.candidates import CandidatePredicate
from solverify.engine.queries import QueryBuilder
from solverify.engine.smtio import check_smt
from solverify.engine.unroll import Inliner
from solverify.translate import HarnessInfo, Translation
from solverify.vir import ast as I
from solverify.vir.prelude import DTYPE


class SolverError(Exception):
    pass


@dataclass
class HoudiniResult:
    invariant: list[CandidatePredicate]
    all_asserts_verified: bool
    rounds: int
    queries: int
    seconds: float
    removal_history: list[list[str]] = field(default_factory=list)


def _asserts_to_assumes(s: I.IrStmt) -> I.IrStmt:
    if isinstance(s, I.Assert):
        return I.Assume(s.cond)
    if isinstance(s, I.Seq):
        return I.Seq(tuple(_asserts_to_assumes(x) for x in s.stmts))
    if isinstance(s, I.If):
        return I.If(s.cond, _asserts_to_assumes(s.then), _asserts_to_assumes(s.els))
    if isinstance(s, I.While):
        return I.While(s.cond, _asserts_to_assumes(s.body))
    return s


@dataclass
class _ProcCheck:
    name: str
    is_ctor: bool
    body: I.IrStmt            # inlined, loop-free
    locals: list[tuple[str, I.IrType]]
    param_types: list[I.IrType]


def _build_checks(tr: Translation, hinfo: HarnessInfo,
                  loop_unroll: int = 8) -> list[_ProcCheck]:
    root = hinfo.root
    checks: list[_ProcCheck] = []

    def inlined(call: I.Call, extra_locals):
        inliner = Inliner(tr.ir, loop_unroll=loop_unroll)
        body = inliner.inline(call)
        return body, extra_locals + inliner.new_locals

    ctor_tys = tr.ctor_params(root)
    args = [I.Var(f"a{i}") for i in range(len(ctor_tys))]
    locals_ = [("inst", I.REF), ("snd", I.REF)] + \
        [(f"a{i}", ty) for i, ty in enumerate(ctor_tys)]
    call = I.Call(tr.ctor_proc(root),
                  tuple([I.Var("inst")] + args + [I.Var("snd")]))
    pre = I.seq(I.Call("New", (), ("inst",)),
                I.Assume(I.op("==", I.select(I.Var(DTYPE), I.Var("inst")),
                              I.NamedConst(root))))
    inliner = Inliner(tr.ir, loop_unroll=loop_unroll)
    body = inliner.inline(I.seq(pre, call))
    checks.append(_ProcCheck(name=tr.ctor_proc(root), is_ctor=True, body=body,
                             locals=locals_ + inliner.new_locals,
                             param_types=ctor_tys))

    for fname, pname, ptypes in tr.public_functions(root):
        args = [I.Var(f"a{i}") for i in range(len(ptypes))]
        locals_ = [("inst", I.REF), ("snd", I.REF)] + \
            [(f"a{i}", ty) for i, ty in enumerate(ptypes)]
        call = I.Call(pname, tuple([I.Var("inst")] + args + [I.Var("snd")]))
        pre = I.Assume(I.op("==", I.select(I.Var(DTYPE), I.Var("inst")),
                            I.NamedConst(root)))
        inliner = Inliner(tr.ir, loop_unroll=loop_unroll)
        body = inliner.inline(I.seq(pre, call))
        checks.append(_ProcCheck(name=pname, is_ctor=False, body=body,
                                 locals=locals_ + inliner.new_locals,
                                 param_types=list(ptypes)))
    return checks


def _proc_query(tr: Translation, check: _ProcCheck,
                entry: list[CandidatePredicate],
                exit_candidates: list[CandidatePredicate],
                asserts_live: bool):
    body = check.body if asserts_live else _asserts_to_assumes(check.body)
    proc = I.IrProcedure(name=f"{check.name}$houdini", params=[], returns=[],
                         locals=check.locals, body=I.Skip())
    qb = QueryBuilder(tr.ir)
    qb.init_proc(proc)
    entry_env = dict(qb.env)
    true_t = qb.bank.boolval(True)
    if not check.is_ctor:
        for cand in entry:
            qb.add_axiom(cand.to_term(qb, entry_env, entry_env["inst"]))
    qb.exec_stmt(body, true_t)
    exit_env = qb.env
    # the constructor check binds inst from the allocation it performs
    for cand in exit_candidates:
        qb.obligations.append((true_t, cand.to_term(qb, exit_env, exit_env["inst"]),
                               f"cand:{cand.text}"))
    return qb.refutation_query()


def houdini_infer(tr: Translation, hinfo: HarnessInfo,
                  candidates: list[CandidatePredicate],
                  solver_path: str | None = None, timeout: float = 120.0,
                  loop_unroll: int = 8, dump_dir: str | None = None) -> HoudiniResult:
    start = time.monotonic()
    checks = _build_checks(tr, hinfo, loop_unroll=loop_unroll)
    remaining = list(candidates)
    rounds = 0
    queries = 0
    history: list[list[str]] = []

    def dump(query, name):
        if dump_dir is None:
            return
        import os
        os.makedirs(dump_dir, exist_ok=True)
        with open(os.path.join(dump_dir, name), "w") as fh:
            fh.write(query.text)

    while True:
        rounds += 1
        if rounds > len(candidates) + 2:
            raise SolverError("candidate removal failed to converge")
        removed: dict[str, CandidatePredicate] = {}
        for check in checks:
            if not remaining:
                break
            live = [c for c in remaining if c.text not in removed]
            if not live:
                break
            query = _proc_query(tr, check, live, live, asserts_live=False)
            queries += 1
            dump(query, f"{check.name}_houdini_{rounds}.smt2")
            result = check_smt(query, timeout=timeout, solver_path=solver_path)
            if result.status == "unsat":
                continue
            if result.status == "sat":
                for sel, label in query.selectors:
                    if result.value(sel) is True:
                        text = label.removeprefix("cand:")
                        for c in live:
                            if c.text == text:
                                removed[text] = c
                continue
            # unknown: fall back to per-candidate checks, refuting on unknown
            for cand in live:
                single = _proc_query(tr, check, live, [cand], asserts_live=False)
                queries += 1
                r = check_smt(single, timeout=timeout, solver_path=solver_path)
                if r.status != "unsat":
                    removed[cand.text] = cand
        if not removed:
            break
        history.append(sorted(removed))
        remaining = [c for c in remaining if c.text not in removed]

    flag = True
    for check in checks:
        query = _proc_query(tr, check, remaining, [], asserts_live=True)
        queries += 1
        dump(query, f"{check.name}_houdini_final.smt2")
        result = check_smt(query, timeout=timeout, solver_path=solver_path)
        if result.status != "unsat":
            flag = False
            break

    return HoudiniResult(invariant=remaining, all_asserts_verified=flag,
                         rounds=rounds, queries=queries,
                         seconds=time.monotonic() - start,
                         removal_history=history)
