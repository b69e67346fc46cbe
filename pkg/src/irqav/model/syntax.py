"""AST node types for the C subset.

Every node carries a parser-assigned ``nid`` that is unique within one
program; analyses and the simulator use ``(nid, op)`` to name an access site.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True)
class CType:
    base: str  # int | unsigned | char | void | struct:<tag>
    pointer: bool = False
    array_len: int | None = None
    fields: tuple[str, ...] = ()  # struct field names, in order

    @property
    def is_struct(self) -> bool:
        return self.base.startswith("struct")

    @property
    def kind(self) -> str:
        if self.array_len is not None:
            return "array"
        if self.pointer:
            return "pointer"
        if self.is_struct:
            return "struct"
        return "scalar"


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class IntLit:
    nid: int
    line: int
    col: int
    value: int


@dataclass(frozen=True)
class StrLit:
    nid: int
    line: int
    col: int
    text: str


@dataclass(frozen=True)
class Name:
    nid: int
    line: int
    col: int
    id: str


@dataclass(frozen=True)
class Index:
    nid: int
    line: int
    col: int
    base: "Name"
    index: "Expr"


@dataclass(frozen=True)
class Field:
    nid: int
    line: int
    col: int
    base: "Name"
    name: str


@dataclass(frozen=True)
class Unary:
    nid: int
    line: int
    col: int
    op: str  # - + ! ~
    operand: "Expr"


@dataclass(frozen=True)
class Deref:
    nid: int
    line: int
    col: int
    operand: "Expr"


@dataclass(frozen=True)
class AddrOf:
    nid: int
    line: int
    col: int
    operand: "Expr"


@dataclass(frozen=True)
class IncDec:
    nid: int
    line: int
    col: int
    op: str  # ++ or --
    prefix: bool
    target: "Expr"


@dataclass(frozen=True)
class Binary:
    nid: int
    line: int
    col: int
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Logical:
    nid: int
    line: int
    col: int
    op: str  # && or ||
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Cond:
    nid: int
    line: int
    col: int
    test: "Expr"
    then: "Expr"
    other: "Expr"


@dataclass(frozen=True)
class Assign:
    nid: int
    line: int
    col: int
    op: str  # "=" or a compound operator token such as "+=" or "|="
    target: "Expr"
    value: "Expr"


@dataclass(frozen=True)
class Call:
    nid: int
    line: int
    col: int
    name: str
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class Cast:
    nid: int
    line: int
    col: int
    type: CType
    operand: "Expr"


Expr = Union[IntLit, StrLit, Name, Index, Field, Unary, Deref, AddrOf, IncDec, Binary, Logical, Cond, Assign, Call, Cast]


# -- statements --------------------------------------------------------------


@dataclass(frozen=True)
class VarDecl:
    name: str
    type: CType
    init: "Expr | tuple[Expr, ...] | None"
    line: int
    col: int


@dataclass(frozen=True)
class Unit:
    """Smallest evaluation unit: one expression evaluated as a whole.

    ``ordinal`` is the statement ordinal inside the enclosing function
    (pre-order); access locations are ordered by ``(line, ordinal, micro)``.
    ``kind`` is one of expr, decl, return, cond, init, step.
    """

    ordinal: int
    line: int
    col: int
    kind: str
    expr: "Expr | None"
    decl: VarDecl | None = None


@dataclass(frozen=True)
class ExprStmt:
    unit: Unit


@dataclass(frozen=True)
class DeclStmt:
    unit: Unit


@dataclass(frozen=True)
class Return:
    unit: Unit


@dataclass(frozen=True)
class If:
    cond: Unit
    then: "Stmt"
    other: "Stmt | None"


@dataclass(frozen=True)
class While:
    cond: Unit
    body: "Stmt"


@dataclass(frozen=True)
class For:
    init: Unit | None
    cond: Unit | None
    step: Unit | None
    body: "Stmt"
    line: int


@dataclass(frozen=True)
class Block:
    stmts: tuple["Stmt", ...]
    line: int


@dataclass(frozen=True)
class Break:
    line: int


@dataclass(frozen=True)
class Continue:
    line: int


@dataclass(frozen=True)
class Empty:
    line: int


Stmt = Union[ExprStmt, DeclStmt, Return, If, While, For, Block, Break, Continue, Empty]


def walk_expr(e: "Expr | None"):
    """Yield ``e`` and all its sub-expressions, parents first."""
    if e is None:
        return
    yield e
    if isinstance(e, (Index,)):
        yield from walk_expr(e.base)
        yield from walk_expr(e.index)
    elif isinstance(e, Field):
        yield from walk_expr(e.base)
    elif isinstance(e, (Unary, Deref, AddrOf, Cast)):
        yield from walk_expr(e.operand)
    elif isinstance(e, IncDec):
        yield from walk_expr(e.target)
    elif isinstance(e, (Binary, Logical)):
        yield from walk_expr(e.left)
        yield from walk_expr(e.right)
    elif isinstance(e, Cond):
        yield from walk_expr(e.test)
        yield from walk_expr(e.then)
        yield from walk_expr(e.other)
    elif isinstance(e, Assign):
        yield from walk_expr(e.target)
        yield from walk_expr(e.value)
    elif isinstance(e, Call):
        for a in e.args:
            yield from walk_expr(a)


def iter_units(s: "Stmt | None"):
    """Yield every evaluation unit of a statement tree in ordinal order."""
    if s is None:
        return
    if isinstance(s, (ExprStmt, DeclStmt, Return)):
        yield s.unit
    elif isinstance(s, If):
        yield s.cond
        yield from iter_units(s.then)
        yield from iter_units(s.other)
    elif isinstance(s, While):
        yield s.cond
        yield from iter_units(s.body)
    elif isinstance(s, For):
        for u in (s.init, s.cond, s.step):
            if u is not None:
                yield u
        yield from iter_units(s.body)
    elif isinstance(s, Block):
        for c in s.stmts:
            yield from iter_units(c)


def unit_exprs(u: Unit):
    """All top-level expressions evaluated by a unit (a decl may hold a list)."""
    if u.expr is not None:
        yield u.expr
    if u.decl is not None and u.decl.init is not None:
        if isinstance(u.decl.init, tuple):
            yield from u.decl.init
        else:
            yield u.decl.init
