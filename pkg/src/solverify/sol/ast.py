"""AST for the core Solidity subset.

Nodes are plain mutable dataclasses; the typechecker annotates expressions in
place (`ty`, plus binding information on variables).  Equality ignores source
positions and type annotations so parse/print round-trip tests can compare
structurally.
"""

from __future__ import annotations

from dataclasses import dataclass, field


# ---------------------------------------------------------------------------
# Types

class SolType:
    pass


@dataclass(frozen=True)
class IntType(SolType):
    def __str__(self) -> str:
        return "int"


@dataclass(frozen=True)
class BoolType(SolType):
    def __str__(self) -> str:
        return "bool"


@dataclass(frozen=True)
class StringType(SolType):
    def __str__(self) -> str:
        return "string"


@dataclass(frozen=True)
class AddressType(SolType):
    def __str__(self) -> str:
        return "address"


@dataclass(frozen=True)
class ContractType(SolType):
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class NamedType(SolType):
    """Unresolved identifier type from the parser; the typechecker replaces it
    with ContractType or (for enums) IntType."""

    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class MappingType(SolType):
    key: SolType  # elementary: int / string / address
    value: SolType
    # Declared with array syntax (T[]); not part of type identity.
    is_array: bool = field(default=False, compare=False, hash=False)

    def __str__(self) -> str:
        if self.is_array:
            return f"{self.value}[]"
        return f"mapping({self.key} => {self.value})"


INT = IntType()
BOOL = BoolType()
STRING = StringType()
ADDRESS = AddressType()


def is_elementary(ty: SolType) -> bool:
    return isinstance(ty, (IntType, StringType, AddressType))


def is_array_type(ty: SolType) -> bool:
    """Arrays are integer-keyed mappings; `.length` and `.push` apply."""
    return isinstance(ty, MappingType) and isinstance(ty.key, IntType)


# ---------------------------------------------------------------------------
# Expressions

@dataclass(eq=False)
class SolExpr:
    pass


def _expr_eq(a, b) -> bool:
    """Structural equality ignoring positions and annotations."""
    if type(a) is not type(b):
        return False
    for name in a.STRUCT_FIELDS:
        va, vb = getattr(a, name), getattr(b, name)
        if isinstance(va, SolExpr):
            if not _expr_eq(va, vb):
                return False
        elif isinstance(va, (list, tuple)):
            if len(va) != len(vb):
                return False
            for xa, xb in zip(va, vb):
                if isinstance(xa, SolExpr):
                    if not _expr_eq(xa, xb):
                        return False
                elif xa != xb:
                    return False
        elif va != vb:
            return False
    return True


@dataclass(eq=False)
class IntLit(SolExpr):
    value: int
    pos: tuple[int, int] = (0, 0)
    ty: SolType | None = None
    STRUCT_FIELDS = ("value",)


@dataclass(eq=False)
class BoolLit(SolExpr):
    value: bool
    pos: tuple[int, int] = (0, 0)
    ty: SolType | None = None
    STRUCT_FIELDS = ("value",)


@dataclass(eq=False)
class StringLit(SolExpr):
    value: str
    pos: tuple[int, int] = (0, 0)
    ty: SolType | None = None
    STRUCT_FIELDS = ("value",)


@dataclass(eq=False)
class AddressLit(SolExpr):
    """Hex literal; only the null address 0x0 is meaningful in the subset."""

    value: int
    pos: tuple[int, int] = (0, 0)
    ty: SolType | None = None
    STRUCT_FIELDS = ("value",)


@dataclass(eq=False)
class Var(SolExpr):
    name: str
    pos: tuple[int, int] = (0, 0)
    ty: SolType | None = None
    binding: str | None = None  # local | param | state | return
    owner: str | None = None  # declaring contract for state vars
    STRUCT_FIELDS = ("name",)


@dataclass(eq=False)
class EnumMember(SolExpr):
    enum: str
    member: str
    pos: tuple[int, int] = (0, 0)
    ty: SolType | None = None
    value: int | None = None  # member index, filled by the typechecker
    STRUCT_FIELDS = ("enum", "member")


@dataclass(eq=False)
class Op(SolExpr):
    op: str
    args: list[SolExpr]
    pos: tuple[int, int] = (0, 0)
    ty: SolType | None = None
    STRUCT_FIELDS = ("op", "args")


@dataclass(eq=False)
class Index(SolExpr):
    base: SolExpr
    key: SolExpr
    pos: tuple[int, int] = (0, 0)
    ty: SolType | None = None
    STRUCT_FIELDS = ("base", "key")


@dataclass(eq=False)
class MsgSender(SolExpr):
    pos: tuple[int, int] = (0, 0)
    ty: SolType | None = None
    STRUCT_FIELDS = ()


@dataclass(eq=False)
class LengthOf(SolExpr):
    base: SolExpr
    pos: tuple[int, int] = (0, 0)
    ty: SolType | None = None
    STRUCT_FIELDS = ("base",)


@dataclass(eq=False)
class ExprCall(SolExpr):
    """Expression-position call; only definition-free boolean functions
    (the nondeterministic-choice declaration) typecheck here."""

    fn: str
    args: list[SolExpr]
    pos: tuple[int, int] = (0, 0)
    ty: SolType | None = None
    STRUCT_FIELDS = ("fn", "args")


SolExpr.__eq__ = _expr_eq  # type: ignore[method-assign]


# ---------------------------------------------------------------------------
# Statements

@dataclass(eq=False)
class SolStmt:
    pass


def _stmt_eq(a, b) -> bool:
    if type(a) is not type(b):
        return False
    for name in a.STRUCT_FIELDS:
        va, vb = getattr(a, name), getattr(b, name)
        if isinstance(va, (SolExpr, SolStmt)):
            if va != vb:
                return False
        elif isinstance(va, (list, tuple)):
            if len(va) != len(vb) or any(xa != xb for xa, xb in zip(va, vb)):
                return False
        elif va != vb:
            return False
    return True


SolStmt.__eq__ = _stmt_eq  # type: ignore[method-assign]


@dataclass(eq=False)
class DeclStmt(SolStmt):
    name: str
    ty: SolType
    init: SolExpr | None
    pos: tuple[int, int] = (0, 0)
    STRUCT_FIELDS = ("name", "ty", "init")


@dataclass(eq=False)
class Assign(SolStmt):
    lhs: SolExpr  # Var or Index chain
    rhs: SolExpr
    pos: tuple[int, int] = (0, 0)
    STRUCT_FIELDS = ("lhs", "rhs")


@dataclass(eq=False)
class Require(SolStmt):
    cond: SolExpr
    pos: tuple[int, int] = (0, 0)
    STRUCT_FIELDS = ("cond",)


@dataclass(eq=False)
class Assert(SolStmt):
    cond: SolExpr
    pos: tuple[int, int] = (0, 0)
    label: str | None = None  # conformance context, set by the instrumenter
    STRUCT_FIELDS = ("cond",)


@dataclass(eq=False)
class If(SolStmt):
    cond: SolExpr
    then: list[SolStmt]
    els: list[SolStmt]
    pos: tuple[int, int] = (0, 0)
    STRUCT_FIELDS = ("cond", "then", "els")


@dataclass(eq=False)
class While(SolStmt):
    cond: SolExpr
    body: list[SolStmt]
    pos: tuple[int, int] = (0, 0)
    STRUCT_FIELDS = ("cond", "body")


@dataclass(eq=False)
class Push(SolStmt):
    base: SolExpr
    value: SolExpr
    pos: tuple[int, int] = (0, 0)
    STRUCT_FIELDS = ("base", "value")


@dataclass(eq=False)
class Return(SolStmt):
    value: SolExpr | None
    pos: tuple[int, int] = (0, 0)
    STRUCT_FIELDS = ("value",)


@dataclass(eq=False)
class InternalCall(SolStmt):
    target: SolExpr | None  # lvalue or None
    fn: str
    args: list[SolExpr]
    pos: tuple[int, int] = (0, 0)
    STRUCT_FIELDS = ("target", "fn", "args")


@dataclass(eq=False)
class ExternalCall(SolStmt):
    target: SolExpr | None
    receiver: SolExpr
    fn: str
    args: list[SolExpr]
    pos: tuple[int, int] = (0, 0)
    STRUCT_FIELDS = ("target", "receiver", "fn", "args")


@dataclass(eq=False)
class NewContract(SolStmt):
    target: SolExpr
    contract: str
    args: list[SolExpr]
    pos: tuple[int, int] = (0, 0)
    STRUCT_FIELDS = ("target", "contract", "args")


@dataclass(eq=False)
class NewArray(SolStmt):
    target: SolExpr
    elem_ty: SolType
    size: SolExpr
    pos: tuple[int, int] = (0, 0)
    STRUCT_FIELDS = ("target", "elem_ty", "size")


@dataclass(eq=False)
class NewMap(SolStmt):
    target: SolExpr
    map_ty: MappingType
    pos: tuple[int, int] = (0, 0)
    STRUCT_FIELDS = ("target", "map_ty")


# ---------------------------------------------------------------------------
# Declarations

@dataclass(eq=False)
class ModifierDef:
    name: str
    pre_stmts: list[SolStmt]
    post_stmts: list[SolStmt]
    pos: tuple[int, int] = (0, 0)
    STRUCT_FIELDS = ("name", "pre_stmts", "post_stmts")
    __eq__ = _stmt_eq


@dataclass(eq=False)
class SolFunction:
    name: str
    params: list[tuple[str, SolType]]
    body: list[SolStmt] | None  # None for definition-free declarations
    returns: SolType | None = None
    applied_modifiers: list[str] = field(default_factory=list)
    visibility: str = "public"
    is_constructor: bool = False
    pos: tuple[int, int] = (0, 0)
    STRUCT_FIELDS = ("name", "params", "body", "returns", "applied_modifiers",
                     "visibility", "is_constructor")
    __eq__ = _stmt_eq


@dataclass(eq=False)
class SolContract:
    name: str
    bases: list[str]
    state_vars: list[tuple[str, SolType]]
    enums: dict[str, list[str]]
    constructor: SolFunction | None
    functions: list[SolFunction]
    modifiers: list[ModifierDef]
    pos: tuple[int, int] = (0, 0)
    # name -> enum name, for state vars declared with an enum type
    enum_vars: dict[str, str] = field(default_factory=dict)

    def state_var(self, name: str) -> SolType | None:
        for n, t in self.state_vars:
            if n == name:
                return t
        return None

    def function(self, name: str) -> SolFunction | None:
        for f in self.functions:
            if f.name == name:
                return f
        return None

    def modifier(self, name: str) -> ModifierDef | None:
        for m in self.modifiers:
            if m.name == name:
                return m
        return None

    STRUCT_FIELDS = ("name", "bases", "state_vars", "enums", "constructor",
                     "functions", "modifiers")
    __eq__ = _stmt_eq


@dataclass(eq=False)
class SolProgram:
    contracts: list[SolContract]

    def contract(self, name: str) -> SolContract | None:
        for c in self.contracts:
            if c.name == name:
                return c
        return None

    STRUCT_FIELDS = ("contracts",)
    __eq__ = _stmt_eq
