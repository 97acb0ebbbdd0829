"""Terms, sorts, and SMT-LIB2 script parsing/printing.

Terms are hash-consed through a TermBank so structurally equal subterms share
one node; the solver relies on node identity for caching.  The script parser
covers the command subset the pipeline emits (plus what common solvers print
back for get-value).
"""

from __future__ import annotations

from dataclasses import dataclass


# -- sorts --------------------------------------------------------------------

INT_S = "Int"
BOOL_S = "Bool"
REF_S = "Ref"


def array_sort(key, value) -> tuple:
    return ("Array", key, value)


def is_array_sort(s) -> bool:
    return isinstance(s, tuple) and s[0] == "Array"


def sort_to_sexpr(s) -> str:
    if is_array_sort(s):
        return f"(Array {sort_to_sexpr(s[1])} {sort_to_sexpr(s[2])})"
    return s


# -- terms --------------------------------------------------------------------

class Term:
    __slots__ = ("op", "args", "value", "sort", "tid", "__weakref__")

    def __init__(self, op: str, args: tuple, value, sort, tid: int):
        self.op = op
        self.args = args
        self.value = value
        self.sort = sort
        self.tid = tid

    def __repr__(self) -> str:
        return f"T{self.tid}:{sexpr(self)}"

    def __hash__(self) -> int:
        return self.tid

    def __eq__(self, other) -> bool:
        return self is other


class TermBank:
    """Hash-consing factory; one bank per solver session."""

    def __init__(self):
        self._cache: dict = {}
        self._next = 0

    def mk(self, op: str, args: tuple = (), value=None, sort=None) -> Term:
        key = (op, tuple(a.tid for a in args), value, sort)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        t = Term(op, args, value, sort, self._next)
        self._next += 1
        self._cache[key] = t
        return t

    def intval(self, v: int) -> Term:
        return self.mk("intval", value=v, sort=INT_S)

    def boolval(self, v: bool) -> Term:
        return self.mk("boolval", value=bool(v), sort=BOOL_S)

    def sym(self, name: str, sort) -> Term:
        return self.mk("sym", value=name, sort=sort)

    def apply(self, name: str, args: tuple, sort) -> Term:
        return self.mk("app", args, value=name, sort=sort)


BOOL_OPS = {"and", "or", "not", "=>", "ite"}
INT_OPS = {"+", "-", "*", "div", "mod", "neg"}
REL_OPS = {"=", "distinct", "<", "<=", ">", ">="}


def sexpr(t: Term) -> str:
    if t.op == "intval":
        return str(t.value) if t.value >= 0 else f"(- {-t.value})"
    if t.op == "boolval":
        return "true" if t.value else "false"
    if t.op in ("sym", "boundvar"):
        return t.value
    if t.op == "app":
        inner = " ".join(sexpr(a) for a in t.args)
        return f"({t.value} {inner})"
    if t.op == "forall":
        var, var_sort = t.value
        return f"(forall (({var} {sort_to_sexpr(var_sort)})) {sexpr(t.args[0])})"
    if t.op == "select":
        return f"(select {sexpr(t.args[0])} {sexpr(t.args[1])})"
    if t.op == "store":
        return (f"(store {sexpr(t.args[0])} {sexpr(t.args[1])} "
                f"{sexpr(t.args[2])})")
    if t.op == "neg":
        return f"(- {sexpr(t.args[0])})"
    inner = " ".join(sexpr(a) for a in t.args)
    return f"({t.op} {inner})"


# -- script model ----------------------------------------------------------------

@dataclass
class Script:
    bank: TermBank
    logic: str = "ALL"
    sorts: list[str] = None
    decls: dict[str, tuple[tuple, object]] = None  # name -> (arg sorts, sort)
    assertions: list[Term] = None
    commands: list[tuple] = None  # trailing (check-sat / get-value ...) in order

    def __post_init__(self):
        self.sorts = self.sorts or []
        self.decls = self.decls or {}
        self.assertions = self.assertions or []
        self.commands = self.commands or []


# -- s-expression reader -----------------------------------------------------------

def _tokenize_sexpr(text: str) -> list[str]:
    out = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
            continue
        if c == ";":
            j = text.find("\n", i)
            i = n if j == -1 else j
            continue
        if c in "()":
            out.append(c)
            i += 1
            continue
        if c == "|":
            j = text.find("|", i + 1)
            if j == -1:
                raise ValueError("unterminated quoted symbol")
            out.append(text[i:j + 1])
            i = j + 1
            continue
        if c == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 1
            out.append(text[i:j + 1])
            i = j + 1
            continue
        j = i
        while j < n and text[j] not in " \t\r\n();":
            j += 1
        out.append(text[i:j])
        i = j
    return out


def read_sexprs(text: str) -> list:
    tokens = _tokenize_sexpr(text)
    pos = 0

    def read():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            items = []
            while tokens[pos] != ")":
                items.append(read())
            pos += 1
            return items
        return tok

    out = []
    while pos < len(tokens):
        out.append(read())
    return out


# -- script parsing ------------------------------------------------------------

class ScriptError(Exception):
    pass


def _parse_sort(sx, known_sorts) -> object:
    if isinstance(sx, list):
        if sx and sx[0] == "Array":
            return array_sort(_parse_sort(sx[1], known_sorts),
                              _parse_sort(sx[2], known_sorts))
        raise ScriptError(f"unknown sort {sx}")
    if sx in ("Int", "Bool") or sx in known_sorts:
        return sx
    raise ScriptError(f"unknown sort {sx}")


class ScriptParser:
    """Incremental command parser; one bank across a session."""

    def __init__(self):
        self.bank = TermBank()
        self.script = Script(bank=self.bank)
        self.defines: dict[str, tuple[list[tuple[str, object]], Term]] = {}

    def feed(self, sx):
        _feed_command(self, sx)

    def to_term(self, sx) -> Term:
        return _script_term(self, sx, {})


def parse_script(text: str) -> Script:
    parser = ScriptParser()
    for sx in read_sexprs(text):
        parser.feed(sx)
    return parser.script


def _script_term(parser: ScriptParser, sx, env: dict) -> Term:
    bank = parser.bank
    script = parser.script
    defines = parser.defines

    def to_term(sx, env: dict) -> Term:
        if isinstance(sx, str):
            if sx == "true":
                return bank.boolval(True)
            if sx == "false":
                return bank.boolval(False)
            if sx.lstrip("-").isdigit():
                return bank.intval(int(sx))
            if sx in env:
                return env[sx]
            if sx in script.decls:
                args, sort = script.decls[sx]
                if args:
                    raise ScriptError(f"{sx} needs arguments")
                return bank.sym(sx, sort)
            if sx in defines:
                params, body = defines[sx]
                if params:
                    raise ScriptError(f"{sx} needs arguments")
                return body
            raise ScriptError(f"unknown symbol {sx!r}")
        head = sx[0]
        if head == "let":
            new_env = dict(env)
            for name, value in sx[1]:
                new_env[name] = to_term(value, env)
            return to_term(sx[2], new_env)
        if head in ("forall", "exists"):
            if head == "exists":
                raise ScriptError("exists is not supported")
            body_env = dict(env)
            bindings = []
            for name, sort_sx in sx[1]:
                sort = _parse_sort(sort_sx, script.sorts)
                bindings.append((name, sort))
                body_env[name] = bank.mk("boundvar", value=name, sort=sort)
            body = to_term(sx[2], body_env)
            for name, sort in reversed(bindings):
                body = bank.mk("forall", (body,), value=(name, sort), sort=BOOL_S)
            return body
        if head == "!":
            return to_term(sx[1], env)  # strip annotations (:pattern ...)
        args = tuple(to_term(a, env) for a in sx[1:])
        if head == "-" and len(args) == 1:
            if args[0].op == "intval":
                return bank.intval(-args[0].value)
            return bank.mk("neg", args, sort=INT_S)
        if head in ("+", "-", "*", "div", "mod"):
            return bank.mk(head, args, sort=INT_S)
        if head in ("<", "<=", ">", ">=", "=", "distinct"):
            return bank.mk(head, args, sort=BOOL_S)
        if head in ("and", "or", "not", "=>"):
            return bank.mk(head, args, sort=BOOL_S)
        if head == "ite":
            return bank.mk("ite", args, sort=args[1].sort)
        if head == "select":
            base_sort = args[0].sort
            if not is_array_sort(base_sort):
                raise ScriptError("select on non-array")
            return bank.mk("select", args, sort=base_sort[2])
        if head == "store":
            return bank.mk("store", args, sort=args[0].sort)
        if head in script.decls:
            arg_sorts, sort = script.decls[head]
            return bank.apply(head, args, sort)
        if head in defines:
            params, body = defines[head]
            if len(params) != len(args):
                raise ScriptError(f"{head}: arity mismatch")
            sub = {name: arg for (name, _), arg in zip(params, args)}
            return _substitute(bank, body, sub)
        raise ScriptError(f"unknown operator {head!r}")

    return to_term(sx, env)


def _feed_command(parser: ScriptParser, sx):
    script = parser.script
    bank = parser.bank
    if not isinstance(sx, list) or not sx:
        raise ScriptError(f"bad command {sx}")
    cmd = sx[0]
    if cmd == "set-logic":
        script.logic = sx[1]
    elif cmd in ("set-option", "set-info"):
        return
    elif cmd == "declare-sort":
        script.sorts.append(sx[1])
    elif cmd == "declare-fun":
        name = sx[1]
        arg_sorts = tuple(_parse_sort(a, script.sorts) for a in sx[2])
        sort = _parse_sort(sx[3], script.sorts)
        script.decls[name] = (arg_sorts, sort)
    elif cmd == "declare-const":
        script.decls[sx[1]] = ((), _parse_sort(sx[2], script.sorts))
    elif cmd == "define-fun":
        name = sx[1]
        params = [(p[0], _parse_sort(p[1], script.sorts)) for p in sx[2]]
        env = {p: bank.mk("boundvar", value=p, sort=s) for p, s in params}
        body = _script_term(parser, sx[4], env)
        parser.defines[name] = (params, body)
    elif cmd == "assert":
        script.assertions.append(_script_term(parser, sx[1], {}))
    elif cmd == "check-sat":
        script.commands.append(("check-sat",))
    elif cmd == "get-value":
        script.commands.append(("get-value",
                                tuple(_script_term(parser, a, {}) for a in sx[1])))
    elif cmd == "get-model":
        script.commands.append(("get-model",))
    elif cmd == "exit":
        script.commands.append(("exit",))
    elif cmd == "reset":
        raise ScriptError("reset handled by the session")
    else:
        raise ScriptError(f"unsupported command {cmd}")


def _substitute(bank: TermBank, t: Term, sub: dict[str, Term]) -> Term:
    cache: dict[int, Term] = {}

    def rec(x: Term) -> Term:
        if x.tid in cache:
            return cache[x.tid]
        if x.op == "boundvar" and x.value in sub:
            out = sub[x.value]
        elif x.args:
            out = bank.mk(x.op, tuple(rec(a) for a in x.args), value=x.value,
                          sort=x.sort)
        else:
            out = x
        cache[x.tid] = out
        return out

    return rec(t)
