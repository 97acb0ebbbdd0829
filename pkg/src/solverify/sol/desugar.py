"""Modifier desugaring.

Each function body becomes pre-statements, body, post-statements, with
multiple modifiers nesting left to right (the first listed is outermost).
Tail returns are rewritten to an assignment of the synthetic return variable
so post-statements still execute, matching how the compiler threads modifier
code around a returning body.
"""

from __future__ import annotations

import copy

from solverify.sol import ast
from solverify.sol.linearize import linearize, resolve_modifier

RETURN_VAR = "__ret"


class UnknownModifier(Exception):
    pass


def _collect_names(stmts: list[ast.SolStmt], out: set[str]):
    for s in stmts:
        if isinstance(s, ast.DeclStmt):
            out.add(s.name)
        elif isinstance(s, ast.If):
            _collect_names(s.then, out)
            _collect_names(s.els, out)
        elif isinstance(s, ast.While):
            _collect_names(s.body, out)


def _rename(stmts: list[ast.SolStmt], mapping: dict[str, str]) -> list[ast.SolStmt]:
    def fix_expr(e: ast.SolExpr):
        if isinstance(e, ast.Var) and e.name in mapping and e.binding in (None, "local"):
            e.name = mapping[e.name]
        for name in e.STRUCT_FIELDS:
            v = getattr(e, name)
            if isinstance(v, ast.SolExpr):
                fix_expr(v)
            elif isinstance(v, list):
                for x in v:
                    if isinstance(x, ast.SolExpr):
                        fix_expr(x)

    def fix_stmt(s: ast.SolStmt):
        if isinstance(s, ast.DeclStmt) and s.name in mapping:
            s.name = mapping[s.name]
        for name in s.STRUCT_FIELDS:
            v = getattr(s, name, None)
            if isinstance(v, ast.SolExpr):
                fix_expr(v)
            elif isinstance(v, list):
                for x in v:
                    if isinstance(x, ast.SolStmt):
                        fix_stmt(x)
                    elif isinstance(x, ast.SolExpr):
                        fix_expr(x)

    for s in stmts:
        fix_stmt(s)
    return stmts


def _normalize_tail_return(fn: ast.SolFunction, body: list[ast.SolStmt]) -> list[ast.SolStmt]:
    if not body or not isinstance(body[-1], ast.Return):
        return body
    ret: ast.Return = body[-1]
    rest = body[:-1]
    if ret.value is None:
        return rest
    lhs = ast.Var(name=RETURN_VAR, pos=ret.pos)
    lhs.binding = "return"
    lhs.ty = fn.returns
    return rest + [ast.Assign(lhs=lhs, rhs=ret.value, pos=ret.pos)]


def desugar_modifiers(program: ast.SolProgram) -> ast.SolProgram:
    """Inline applied modifiers into function bodies, in place."""
    order = linearize(program)
    for c in program.contracts:
        fns = c.functions + ([c.constructor] if c.constructor else [])
        for fn in fns:
            if fn.body is None or not fn.applied_modifiers:
                continue
            taken = set(n for n, _ in fn.params)
            _collect_names(fn.body, taken)
            body = _normalize_tail_return(fn, fn.body)
            for mod_name in reversed(fn.applied_modifiers):
                resolved = resolve_modifier(program, order, c.name, mod_name)
                if resolved is None:
                    raise UnknownModifier(f"{c.name}.{fn.name}: no modifier "
                                          f"named {mod_name!r}")
                _, mod = resolved
                pre = copy.deepcopy(mod.pre_stmts)
                post = copy.deepcopy(mod.post_stmts)
                declared: set[str] = set()
                _collect_names(pre, declared)
                _collect_names(post, declared)
                mapping = {}
                for n in sorted(declared):
                    if n in taken:
                        k = 1
                        while f"{n}_{k}" in taken or f"{n}_{k}" in declared:
                            k += 1
                        mapping[n] = f"{n}_{k}"
                if mapping:
                    _rename(pre, mapping)
                    _rename(post, mapping)
                taken |= {mapping.get(n, n) for n in declared}
                body = pre + body + post
            fn.body = body
            fn.applied_modifiers = []
    return program
