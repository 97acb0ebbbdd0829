"""Pretty-printer for the Solidity subset; output re-parses to an
structurally equal program."""

from __future__ import annotations

from solverify.sol import ast

_PREC = {
    "==>": 1, "||": 2, "&&": 3, "==": 4, "!=": 4,
    "<": 5, "<=": 5, ">": 5, ">=": 5,
    "+": 6, "-": 6, "*": 7, "/": 7, "%": 7,
    "neg": 8, "!": 8,
}


def print_expr(e: ast.SolExpr, parent_prec: int = 0) -> str:
    if isinstance(e, ast.IntLit):
        return str(e.value)
    if isinstance(e, ast.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, ast.StringLit):
        return f'"{e.value}"'
    if isinstance(e, ast.AddressLit):
        return hex(e.value)
    if isinstance(e, ast.Var):
        return e.name
    if isinstance(e, ast.EnumMember):
        return f"{e.enum}.{e.member}"
    if isinstance(e, ast.MsgSender):
        return "msg.sender"
    if isinstance(e, ast.LengthOf):
        return f"{print_expr(e.base, 9)}.length"
    if isinstance(e, ast.Index):
        return f"{print_expr(e.base, 9)}[{print_expr(e.key)}]"
    if isinstance(e, ast.ExprCall):
        args = ", ".join(print_expr(a) for a in e.args)
        return f"{e.fn}({args})"
    if isinstance(e, ast.Op):
        prec = _PREC[e.op]
        if e.op == "!":
            s = f"!{print_expr(e.args[0], prec)}"
        elif e.op == "neg":
            s = f"-{print_expr(e.args[0], prec)}"
        else:
            # ==> is right-associative; everything else left.
            lp, rp = (prec + 1, prec) if e.op == "==>" else (prec, prec + 1)
            s = f"{print_expr(e.args[0], lp)} {e.op} {print_expr(e.args[1], rp)}"
        return f"({s})" if prec < parent_prec else s
    raise ValueError(f"cannot print {type(e).__name__}")


def _type_str(ty: ast.SolType, enum_name: str | None = None) -> str:
    if enum_name is not None:
        return enum_name
    return str(ty)


def print_stmt(s: ast.SolStmt, indent: int) -> list[str]:
    pad = "    " * indent
    if isinstance(s, ast.DeclStmt):
        init = f" = {print_expr(s.init)}" if s.init is not None else ""
        return [f"{pad}{s.ty} {s.name}{init};"]
    if isinstance(s, ast.Assign):
        return [f"{pad}{print_expr(s.lhs)} = {print_expr(s.rhs)};"]
    if isinstance(s, ast.Require):
        return [f"{pad}require({print_expr(s.cond)});"]
    if isinstance(s, ast.Assert):
        return [f"{pad}assert({print_expr(s.cond)});"]
    if isinstance(s, ast.If):
        lines = [f"{pad}if ({print_expr(s.cond)}) {{"]
        for t in s.then:
            lines += print_stmt(t, indent + 1)
        if s.els:
            lines.append(f"{pad}}} else {{")
            for t in s.els:
                lines += print_stmt(t, indent + 1)
        lines.append(f"{pad}}}")
        return lines
    if isinstance(s, ast.While):
        lines = [f"{pad}while ({print_expr(s.cond)}) {{"]
        for t in s.body:
            lines += print_stmt(t, indent + 1)
        lines.append(f"{pad}}}")
        return lines
    if isinstance(s, ast.Push):
        return [f"{pad}{print_expr(s.base, 9)}.push({print_expr(s.value)});"]
    if isinstance(s, ast.Return):
        if s.value is None:
            return [f"{pad}return;"]
        return [f"{pad}return {print_expr(s.value)};"]
    if isinstance(s, ast.InternalCall):
        call = f"{s.fn}({', '.join(print_expr(a) for a in s.args)})"
        if s.target is not None:
            return [f"{pad}{print_expr(s.target)} = {call};"]
        return [f"{pad}{call};"]
    if isinstance(s, ast.ExternalCall):
        call = f"{print_expr(s.receiver, 9)}.{s.fn}({', '.join(print_expr(a) for a in s.args)})"
        if s.target is not None:
            return [f"{pad}{print_expr(s.target)} = {call};"]
        return [f"{pad}{call};"]
    if isinstance(s, ast.NewContract):
        args = ", ".join(print_expr(a) for a in s.args)
        return [f"{pad}{print_expr(s.target)} = new {s.contract}({args});"]
    if isinstance(s, ast.NewArray):
        return [f"{pad}{print_expr(s.target)} = new {s.elem_ty}[]({print_expr(s.size)});"]
    if isinstance(s, ast.NewMap):
        return [f"{pad}{print_expr(s.target)} = new ({s.map_ty.key} => {s.map_ty.value})();"]
    raise ValueError(f"cannot print {type(s).__name__}")


def _print_function(fn: ast.SolFunction, contract: ast.SolContract,
                    keyword: str, indent: int) -> list[str]:
    pad = "    " * indent
    params = ", ".join(f"{t} {n}" for n, t in fn.params)
    parts = [f"{keyword}({params})"]
    for m in fn.applied_modifiers:
        parts.append(f"{m}()")
    parts.append(fn.visibility)
    if fn.returns is not None:
        parts.append(f"returns ({fn.returns})")
    head = pad + " ".join(parts)
    if fn.body is None:
        return [head + ";"]
    lines = [head + " {"]
    for s in fn.body:
        lines += print_stmt(s, indent + 1)
    lines.append(pad + "}")
    return lines


def print_program(program: ast.SolProgram) -> str:
    lines: list[str] = []
    for c in program.contracts:
        head = f"contract {c.name}"
        if c.bases:
            head += " is " + ", ".join(c.bases)
        lines.append(head + " {")
        for ename, members in c.enums.items():
            lines.append(f"    enum {ename} {{{', '.join(members)}}}")
        for n, ty in c.state_vars:
            lines.append(f"    {_type_str(ty, c.enum_vars.get(n))} public {n};")
        for m in c.modifiers:
            lines.append(f"    modifier {m.name}() {{")
            for s in m.pre_stmts:
                lines += print_stmt(s, 2)
            lines.append("        _;")
            for s in m.post_stmts:
                lines += print_stmt(s, 2)
            lines.append("    }")
        if c.constructor is not None and not _is_implicit_ctor(c.constructor):
            lines += _print_function(c.constructor, c, "constructor", 1)
        for fn in c.functions:
            lines += _print_function(fn, c, f"function {fn.name}", 1)
        lines.append("}")
        lines.append("")
    return "\n".join(lines)


def _is_implicit_ctor(fn: ast.SolFunction) -> bool:
    return not fn.params and fn.body == [] and not fn.applied_modifiers
