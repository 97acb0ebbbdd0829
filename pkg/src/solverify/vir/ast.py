"""IR syntax: two base sorts (int, Ref) plus booleans and curried maps.

Contract names are program-level integer constants; booleans are kept as a
distinct type for clarity but carry no arithmetic.  Statements are standard:
havoc, assignment, map store, assume/assert, calls, structured control flow.
"""

from __future__ import annotations

from dataclasses import dataclass, field


# -- types ------------------------------------------------------------------

class IrType:
    pass


@dataclass(frozen=True)
class IntT(IrType):
    def __str__(self) -> str:
        return "int"


@dataclass(frozen=True)
class BoolT(IrType):
    def __str__(self) -> str:
        return "bool"


@dataclass(frozen=True)
class RefT(IrType):
    def __str__(self) -> str:
        return "Ref"


@dataclass(frozen=True)
class MapType(IrType):
    key: IrType
    value: IrType

    def __str__(self) -> str:
        return f"[{self.key}]{self.value}"


INT = IntT()
BOOL = BoolT()
REF = RefT()


# -- expressions --------------------------------------------------------------

@dataclass(frozen=True)
class IrExpr:
    pass


@dataclass(frozen=True)
class IConst(IrExpr):
    value: int


@dataclass(frozen=True)
class BConst(IrExpr):
    value: bool


@dataclass(frozen=True)
class RConst(IrExpr):
    """Reference literal; 0 is the null address."""

    value: int


@dataclass(frozen=True)
class NamedConst(IrExpr):
    """Program-level integer constant (contract name codes)."""

    name: str


@dataclass(frozen=True)
class Var(IrExpr):
    name: str


@dataclass(frozen=True)
class Op(IrExpr):
    op: str
    args: tuple[IrExpr, ...]


@dataclass(frozen=True)
class UFApply(IrExpr):
    name: str
    args: tuple[IrExpr, ...]


@dataclass(frozen=True)
class Select(IrExpr):
    base: IrExpr
    keys: tuple[IrExpr, ...]


@dataclass(frozen=True)
class Forall(IrExpr):
    var: str
    var_ty: IrType
    body: IrExpr


def op(name: str, *args: IrExpr) -> Op:
    return Op(name, tuple(args))


def select(base: IrExpr, *keys: IrExpr) -> Select:
    return Select(base, tuple(keys))


def disj(*parts: IrExpr) -> IrExpr:
    if not parts:
        return BConst(False)
    out = parts[0]
    for p in parts[1:]:
        out = op("||", out, p)
    return out


# -- statements ---------------------------------------------------------------

class IrStmt:
    pass


@dataclass(frozen=True)
class Skip(IrStmt):
    pass


@dataclass(frozen=True)
class Havoc(IrStmt):
    var: str


@dataclass(frozen=True)
class Assign(IrStmt):
    var: str
    expr: IrExpr


@dataclass(frozen=True)
class Store(IrStmt):
    base: str
    keys: tuple[IrExpr, ...]
    value: IrExpr


@dataclass(frozen=True)
class Assume(IrStmt):
    cond: IrExpr


@dataclass(frozen=True)
class Assert(IrStmt):
    cond: IrExpr
    label: str = ""


@dataclass(frozen=True)
class Call(IrStmt):
    proc: str
    args: tuple[IrExpr, ...]
    results: tuple[str, ...] = ()


@dataclass(frozen=True)
class Seq(IrStmt):
    stmts: tuple[IrStmt, ...]


@dataclass(frozen=True)
class If(IrStmt):
    cond: IrExpr
    then: IrStmt
    els: IrStmt


@dataclass(frozen=True)
class While(IrStmt):
    cond: IrExpr
    body: IrStmt


def seq(*stmts: IrStmt) -> IrStmt:
    flat: list[IrStmt] = []
    for s in stmts:
        if isinstance(s, Seq):
            flat.extend(s.stmts)
        elif not isinstance(s, Skip):
            flat.append(s)
    if not flat:
        return Skip()
    if len(flat) == 1:
        return flat[0]
    return Seq(tuple(flat))


def seq_list(s: IrStmt) -> list[IrStmt]:
    if isinstance(s, Seq):
        return list(s.stmts)
    if isinstance(s, Skip):
        return []
    return [s]


# -- procedures and programs ---------------------------------------------------

@dataclass
class IrProcedure:
    name: str
    params: list[tuple[str, IrType]]
    returns: list[tuple[str, IrType]]
    locals: list[tuple[str, IrType]]
    body: IrStmt

    def local_type(self, name: str) -> IrType | None:
        for n, t in self.params + self.returns + self.locals:
            if n == name:
                return t
        return None


@dataclass
class IrProgram:
    globals: dict[str, IrType] = field(default_factory=dict)
    ufs: dict[str, tuple[tuple[IrType, ...], IrType]] = field(default_factory=dict)
    constants: dict[str, int] = field(default_factory=dict)
    procedures: dict[str, IrProcedure] = field(default_factory=dict)

    def add_proc(self, proc: IrProcedure):
        if proc.name in self.procedures:
            raise ValueError(f"duplicate procedure {proc.name}")
        self.procedures[proc.name] = proc

    def var_type(self, proc: IrProcedure | None, name: str) -> IrType | None:
        if proc is not None:
            t = proc.local_type(name)
            if t is not None:
                return t
        return self.globals.get(name)
