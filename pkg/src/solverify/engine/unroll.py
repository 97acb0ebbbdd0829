"""Harness unrolling and transitive call inlining.

The bounded check needs a loop-free, call-free procedure: the harness loop
is replaced by k copies of its body (per-iteration locals renamed with an
iteration suffix), inner loops unroll to a fixed depth with a blocking
assumption on the guard, and calls inline with callee locals renamed."""

from __future__ import annotations

import itertools
import re

from solverify.vir import ast as I


class RecursionDepthExceeded(Exception):
    def __init__(self, limit: int):
        self.limit = limit
        super().__init__(f"call inlining exceeded depth {limit}")


NONDET_RE = re.compile(r"^nd\d+(@\d+)?(\$\d+)?$")


def rename_expr(e: I.IrExpr, mapping: dict[str, str]) -> I.IrExpr:
    if isinstance(e, I.Var):
        return I.Var(mapping.get(e.name, e.name))
    if isinstance(e, I.Op):
        return I.Op(e.op, tuple(rename_expr(a, mapping) for a in e.args))
    if isinstance(e, I.UFApply):
        return I.UFApply(e.name, tuple(rename_expr(a, mapping) for a in e.args))
    if isinstance(e, I.Select):
        return I.Select(rename_expr(e.base, mapping),
                        tuple(rename_expr(k, mapping) for k in e.keys))
    if isinstance(e, I.Forall):
        inner = {k: v for k, v in mapping.items() if k != e.var}
        return I.Forall(e.var, e.var_ty, rename_expr(e.body, inner))
    return e


def rename_stmt(s: I.IrStmt, mapping: dict[str, str]) -> I.IrStmt:
    def rx(e: I.IrExpr) -> I.IrExpr:
        return rename_expr(e, mapping)

    if isinstance(s, I.Skip):
        return s
    if isinstance(s, I.Havoc):
        return I.Havoc(mapping.get(s.var, s.var))
    if isinstance(s, I.Assign):
        return I.Assign(mapping.get(s.var, s.var), rx(s.expr))
    if isinstance(s, I.Store):
        return I.Store(mapping.get(s.base, s.base),
                       tuple(rx(k) for k in s.keys), rx(s.value))
    if isinstance(s, I.Assume):
        return I.Assume(rx(s.cond))
    if isinstance(s, I.Assert):
        return I.Assert(rx(s.cond), s.label)
    if isinstance(s, I.Call):
        return I.Call(s.proc, tuple(rx(a) for a in s.args),
                      tuple(mapping.get(r, r) for r in s.results))
    if isinstance(s, I.Seq):
        return I.Seq(tuple(rename_stmt(x, mapping) for x in s.stmts))
    if isinstance(s, I.If):
        return I.If(rx(s.cond), rename_stmt(s.then, mapping),
                    rename_stmt(s.els, mapping))
    if isinstance(s, I.While):
        return I.While(rx(s.cond), rename_stmt(s.body, mapping))
    raise TypeError(type(s).__name__)


class Inliner:
    def __init__(self, program: I.IrProgram, depth_limit: int = 16,
                 loop_unroll: int = 8):
        self.program = program
        self.depth_limit = depth_limit
        self.loop_unroll = loop_unroll
        self.counter = itertools.count()
        self.new_locals: list[tuple[str, I.IrType]] = []

    def inline(self, s: I.IrStmt, depth: int = 0) -> I.IrStmt:
        if isinstance(s, I.Seq):
            return I.seq(*[self.inline(x, depth) for x in s.stmts])
        if isinstance(s, I.If):
            return I.If(s.cond, self.inline(s.then, depth),
                        self.inline(s.els, depth))
        if isinstance(s, I.While):
            return self._unroll_loop(s, depth, self.loop_unroll)
        if isinstance(s, I.Call):
            return self._inline_call(s, depth)
        return s

    def _unroll_loop(self, s: I.While, depth: int, n: int) -> I.IrStmt:
        if n == 0:
            return I.Assume(I.op("!", s.cond))
        body = self.inline(s.body, depth)
        return I.If(s.cond, I.seq(body, self._unroll_loop(s, depth, n - 1)),
                    I.Skip())

    def _inline_call(self, s: I.Call, depth: int) -> I.IrStmt:
        if depth >= self.depth_limit:
            raise RecursionDepthExceeded(self.depth_limit)
        callee = self.program.procedures.get(s.proc)
        if callee is None:
            raise KeyError(f"unknown procedure {s.proc}")
        k = next(self.counter)
        mapping: dict[str, str] = {}
        for name, ty in callee.params + callee.returns + callee.locals:
            mapping[name] = f"{name}@{k}"
            self.new_locals.append((mapping[name], ty))
        stmts: list[I.IrStmt] = []
        for (pname, _), arg in zip(callee.params, s.args):
            stmts.append(I.Assign(mapping[pname], arg))
        body = rename_stmt(callee.body, mapping)
        stmts.append(self.inline(body, depth + 1))
        for res, (rname, _) in zip(s.results, callee.returns):
            stmts.append(I.Assign(res, I.Var(mapping[rname])))
        return I.seq(*stmts)


def assigned_vars(s: I.IrStmt, out: set[str]):
    if isinstance(s, I.Havoc):
        out.add(s.var)
    elif isinstance(s, I.Assign):
        out.add(s.var)
    elif isinstance(s, I.Call):
        out.update(s.results)
    elif isinstance(s, I.Seq):
        for x in s.stmts:
            assigned_vars(x, out)
    elif isinstance(s, I.If):
        assigned_vars(s.then, out)
        assigned_vars(s.els, out)
    elif isinstance(s, I.While):
        assigned_vars(s.body, out)


def unroll_harness(program: I.IrProgram, harness: I.IrProcedure, k: int,
                   depth_limit: int = 16, loop_unroll: int = 8) -> I.IrProcedure:
    """Loop-free, call-free copy of the harness with the top loop unrolled k
    times.  Per-iteration locals get a $i suffix so each iteration's
    nondeterministic inputs are distinct variables."""
    local_types = dict(harness.params + harness.returns + harness.locals)
    prefix: list[I.IrStmt] = []
    loop: I.While | None = None
    for s in I.seq_list(harness.body):
        if isinstance(s, I.While) and loop is None:
            loop = s
            continue
        if loop is None:
            prefix.append(s)
        else:
            raise ValueError("statements after the harness loop")

    new_locals = list(harness.locals)
    stmts = list(prefix)
    if loop is not None:
        loop_vars: set[str] = set()
        assigned_vars(loop.body, loop_vars)
        loop_vars &= set(local_types)
        for i in range(1, k + 1):
            mapping = {v: f"{v}${i}" for v in sorted(loop_vars)}
            for v in sorted(loop_vars):
                new_locals.append((mapping[v], local_types[v]))
            stmts.append(rename_stmt(loop.body, mapping))

    inliner = Inliner(program, depth_limit=depth_limit, loop_unroll=loop_unroll)
    body = inliner.inline(I.seq(*stmts))
    return I.IrProcedure(name=f"{harness.name}$unrolled{k}", params=[],
                         returns=[], locals=new_locals + inliner.new_locals,
                         body=body)


def is_nondet_var(name: str) -> bool:
    return NONDET_RE.match(name) is not None
