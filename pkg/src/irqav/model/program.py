"""Normalized program model: functions with CFGs, globals, ISR priorities."""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

from ..config import AnalysisConfig
from ..errors import CSyntaxError, MissingMain, ModelError, UnsupportedConstruct
from . import syntax as S
from .cfg import CFG, build_cfg
from .parser import ParseResult, Parser


@dataclass(frozen=True)
class IndexClass:
    """Static classification of an array index: constant, interval or unknown."""

    kind: str  # constant | interval | unknown
    lo: int
    hi: int

    @classmethod
    def constant(cls, k: int) -> "IndexClass":
        return cls("constant", k, k)

    @classmethod
    def interval(cls, lo: int, hi: int) -> "IndexClass":
        return cls("constant", lo, lo) if lo == hi else cls("interval", lo, hi)

    @classmethod
    def unknown(cls, length: int) -> "IndexClass":
        return cls("unknown", 0, length - 1)

    def intersects(self, other: "IndexClass") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def contains(self, k: int) -> bool:
        return self.lo <= k <= self.hi

    def __str__(self) -> str:
        if self.kind == "constant":
            return str(self.lo)
        if self.kind == "interval":
            return f"{self.lo}..{self.hi}"
        return "?"


@dataclass(frozen=True)
class VarPath:
    """A global, optionally narrowed to one array element range or one struct field."""

    base: str
    index: IndexClass | int | None = None
    field: str | None = None

    @property
    def key(self) -> str:
        """Variable name without any array index; the unit of task partitioning."""
        return f"{self.base}.{self.field}" if self.field else self.base

    def __str__(self) -> str:
        if self.field:
            return f"{self.base}.{self.field}"
        if self.index is not None:
            return f"{self.base}[{self.index}]"
        return self.base


def var_key(text: str) -> str:
    """Strip an array subscript from a rendered variable name."""
    return text.split("[", 1)[0].strip()


@dataclass(frozen=True)
class GlobalVar:
    name: str
    ctype: S.CType
    initial: int | tuple[int, ...] | VarPath | None
    line: int

    @property
    def kind(self) -> str:
        return self.ctype.kind

    @property
    def length(self) -> int | None:
        return self.ctype.array_len

    @property
    def fields(self) -> tuple[str, ...]:
        return self.ctype.fields


@dataclass(frozen=True)
class FunctionDef:
    name: str
    return_type: S.CType
    params: tuple[S.VarDecl, ...]
    body: S.Block
    cfg: CFG
    is_isr: bool
    priority: int | None  # None for helpers that are not scheduling roots
    line: int
    end_line: int
    locals: Mapping[str, S.CType]

    def units(self) -> list[S.Unit]:
        return list(S.iter_units(self.body))


@dataclass(frozen=True)
class Prototype:
    name: str
    line: int


@dataclass(frozen=True)
class ProgramModel:
    source_text: str
    line_offsets: tuple[int, ...]
    functions: tuple[FunctionDef, ...]
    globals: tuple[GlobalVar, ...]
    isr_table: Mapping[str, int]
    intrinsics: tuple[frozenset[str], frozenset[str]]  # (enable names, disable names)
    prototypes: tuple[Prototype, ...]
    spans: tuple[tuple[str, str, int, int], ...]
    includes: tuple[int, ...] = ()

    def function(self, name: str) -> FunctionDef:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)

    def has_function(self, name: str) -> bool:
        return any(f.name == name for f in self.functions)

    def global_var(self, name: str) -> GlobalVar | None:
        for g in self.globals:
            if g.name == name:
                return g
        return None

    @property
    def global_names(self) -> frozenset[str]:
        return frozenset(g.name for g in self.globals)

    @property
    def tasks(self) -> list[str]:
        """Scheduling roots ordered by priority (main first)."""
        return sorted(self.isr_table, key=self.isr_table.__getitem__)

    @property
    def isr_ids(self) -> dict[int, str]:
        return {p: n for n, p in self.isr_table.items() if n != "main"}

    def priority(self, task: str) -> int:
        return self.isr_table[task]

    def is_intrinsic(self, name: str) -> bool:
        return name in self.intrinsics[0] or name in self.intrinsics[1]

    @property
    def line_count(self) -> int:
        return len(self.line_offsets)

    def line_text(self, line: int) -> str:
        start = self.line_offsets[line - 1]
        end = self.line_offsets[line] if line < len(self.line_offsets) else len(self.source_text)
        return self.source_text[start:end].rstrip("\r\n")

    def line_of_offset(self, offset: int) -> int:
        return bisect.bisect_right(self.line_offsets, offset)


def _line_offsets(text: str) -> tuple[int, ...]:
    offs = [0]
    for i, ch in enumerate(text):
        if ch == "\n" and i + 1 < len(text):
            offs.append(i + 1)
    return tuple(offs)


def _const(e, parser: Parser) -> int | None:
    return parser.const_value(e)


def _global_initial(d: S.VarDecl, parser: Parser, names: set[str]):
    if d.init is None:
        if d.type.kind == "array":
            return (0,) * (d.type.array_len or 0)
        if d.type.kind == "struct":
            return (0,) * len(d.type.fields)
        if d.type.kind == "pointer":
            return None
        return 0
    if isinstance(d.init, tuple):
        vals = []
        for e in d.init:
            v = _const(e, parser)
            if v is None:
                raise UnsupportedConstruct(d.line, "non-constant aggregate initializer")
            vals.append(v)
        size = d.type.array_len if d.type.kind == "array" else len(d.type.fields)
        return tuple(vals) + (0,) * (size - len(vals))
    if d.type.kind == "pointer":
        e = d.init
        if isinstance(e, S.IntLit) and e.value == 0:
            return None
        if isinstance(e, S.AddrOf):
            tgt = e.operand
            if isinstance(tgt, S.Name) and tgt.id in names:
                return VarPath(tgt.id)
            if isinstance(tgt, S.Field) and tgt.base.id in names:
                return VarPath(tgt.base.id, field=tgt.name)
            if isinstance(tgt, S.Index) and tgt.base.id in names:
                k = _const(tgt.index, parser)
                if k is not None:
                    return VarPath(tgt.base.id, index=k)
        raise UnsupportedConstruct(d.line, "pointer initializer that is not &global or 0")
    v = _const(d.init, parser)
    if v is None:
        raise UnsupportedConstruct(d.line, "non-constant global initializer")
    return v


def _called_names(body: S.Block) -> list[tuple[str, int]]:
    out = []
    for u in S.iter_units(body):
        for e in S.unit_exprs(u):
            for sub in S.walk_expr(e):
                if isinstance(sub, S.Call):
                    out.append((sub.name, sub.line))
    return out


def _collect_locals(pf, globals_: dict[str, S.CType]) -> dict[str, S.CType]:
    out: dict[str, S.CType] = {}
    decls = list(pf.params) + [u.decl for u in S.iter_units(pf.body) if u.decl is not None]
    for d in decls:
        if d.name in out:
            raise UnsupportedConstruct(d.line, f"redeclaration of local {d.name!r} (locals are function-scoped)")
        if d.name in globals_:
            raise UnsupportedConstruct(d.line, f"local {d.name!r} shadows a global")
        out[d.name] = d.type
    return out


def _check_expr(e, scope: dict[str, S.CType], fname: str) -> None:
    for sub in S.walk_expr(e):
        if isinstance(sub, S.Call):
            if sub.name in scope:
                raise UnsupportedConstruct(sub.line, "call through a function pointer")
            continue
        if isinstance(sub, S.Index):
            t = scope.get(sub.base.id)
            if t is None:
                raise CSyntaxError(sub.line, f"undeclared identifier {sub.base.id!r} in {fname}")
            if t.kind != "array":
                raise UnsupportedConstruct(sub.line, f"indexing non-array {sub.base.id!r}")
        elif isinstance(sub, S.Field):
            t = scope.get(sub.base.id)
            if t is None:
                raise CSyntaxError(sub.line, f"undeclared identifier {sub.base.id!r} in {fname}")
            if t.kind != "struct" or sub.name not in t.fields:
                raise CSyntaxError(sub.line, f"{sub.base.id!r} has no field {sub.name!r}")
    _check_bare_names(e, scope, fname)


def _check_bare_names(e, scope: dict[str, S.CType], fname: str) -> None:
    # bare names are fine for scalars and pointers; aggregates need a selector
    if isinstance(e, (S.Index, S.Field)):
        _check_bare_names(e.index, scope, fname) if isinstance(e, S.Index) else None
        return
    if isinstance(e, S.AddrOf):
        if isinstance(e.operand, S.Name):
            t = scope.get(e.operand.id)
            if t is None:
                raise CSyntaxError(e.line, f"undeclared identifier {e.operand.id!r} in {fname}")
            if t.kind in ("array", "struct"):
                raise UnsupportedConstruct(e.line, "address of a whole aggregate")
            return
        _check_bare_names(e.operand, scope, fname)
        return
    if isinstance(e, S.Name):
        t = scope.get(e.id)
        if t is None:
            raise CSyntaxError(e.line, f"undeclared identifier {e.id!r} in {fname}")
        if t.kind in ("array", "struct"):
            raise UnsupportedConstruct(e.line, f"whole-aggregate use of {e.id!r}")
        return
    for child in _children(e):
        _check_bare_names(child, scope, fname)


def _children(e):
    if isinstance(e, (S.Unary, S.Deref, S.Cast)):
        return (e.operand,)
    if isinstance(e, S.IncDec):
        return (e.target,)
    if isinstance(e, (S.Binary, S.Logical)):
        return (e.left, e.right)
    if isinstance(e, S.Cond):
        return (e.test, e.then, e.other)
    if isinstance(e, S.Assign):
        return (e.target, e.value)
    if isinstance(e, S.Call):
        return e.args
    return ()


def identify_isrs(names: list[str], config: AnalysisConfig) -> dict[str, int]:
    """Map ISR function names to priorities using the config's naming rule."""
    if config.isr_priorities is not None:
        table = {n: int(p) for n, p in config.isr_priorities.items() if n in names}
        missing = set(config.isr_priorities) - set(names)
        if missing:
            raise ModelError(f"isr_priorities names undefined functions: {sorted(missing)}")
        return table
    rx = re.compile(config.isr_regex)
    table = {}
    for n in names:
        m = rx.match(n)
        if m is None:
            continue
        groups = [g for g in m.groups() if g is not None]
        if not groups or not groups[-1].lstrip("-").isdigit():
            raise ModelError(f"isr_regex must capture the priority as its last group (function {n})")
        table[n] = int(groups[-1])
    return table


def build_model(source: str, result: ParseResult, parser: Parser, config: AnalysisConfig) -> ProgramModel:
    seen: dict[str, int] = {}
    defined: dict[str, object] = {}
    protos: list[Prototype] = []
    for pf in result.functions:
        if pf.body is None:
            protos.append(Prototype(pf.name, pf.line))
            continue
        if pf.name in defined:
            raise ModelError(f"function {pf.name!r} defined twice")
        defined[pf.name] = pf
    for g in result.globals:
        if g.decl.name in seen or g.decl.name in defined:
            raise ModelError(f"duplicate global {g.decl.name!r} (line {g.decl.line})")
        seen[g.decl.name] = g.decl.line
    if "main" not in defined:
        raise MissingMain()

    names = [n for n in defined]
    isrs = identify_isrs(names, config)
    if "main" in isrs:
        raise ModelError("main cannot be an ISR")
    prios = list(isrs.values())
    if len(set(prios)) != len(prios):
        raise ModelError(f"ISR priorities are not pairwise distinct: {isrs}")
    if any(p <= 0 for p in prios):
        raise ModelError("ISR priorities must be > 0 (main is fixed at 0)")
    table = {"main": 0, **dict(sorted(isrs.items(), key=lambda kv: kv[1]))}

    # recursion check over direct calls between defined functions
    calls = {n: {c for c, _ in _called_names(defined[n].body) if c in defined} for n in names}  # type: ignore[attr-defined]
    state: dict[str, int] = {}

    def visit(n: str, path: list[str]) -> None:
        state[n] = 1
        for c in sorted(calls[n]):
            if state.get(c) == 1:
                line = next(l for cn, l in _called_names(defined[n].body) if cn == c)  # type: ignore[attr-defined]
                raise UnsupportedConstruct(line, f"recursion ({' -> '.join(path + [c])})")
            if c not in state:
                visit(c, path + [c])
        state[n] = 2

    for n in names:
        if n not in state:
            visit(n, [n])

    gnames = set(seen)
    globals_ = tuple(
        GlobalVar(g.decl.name, g.decl.type, _global_initial(g.decl, parser, gnames), g.decl.line) for g in result.globals
    )
    gtypes = {g.name: g.ctype for g in globals_}
    functions = []
    for pf in result.functions:
        if pf.body is None:
            continue
        local_types = _collect_locals(pf, gtypes)
        scope = {**gtypes, **local_types}
        for u in S.iter_units(pf.body):
            for e in S.unit_exprs(u):
                _check_expr(e, scope, pf.name)
        functions.append(
            FunctionDef(
                pf.name,
                pf.return_type,
                pf.params,
                pf.body,
                build_cfg(pf.body),
                pf.name in isrs,
                table.get(pf.name),
                pf.line,
                pf.end_line,
                MappingProxyType(local_types),
            )
        )
    return ProgramModel(
        source_text=source,
        line_offsets=_line_offsets(source),
        functions=tuple(functions),
        globals=globals_,
        isr_table=MappingProxyType(table),
        intrinsics=(config.enable_names, config.disable_names),
        prototypes=tuple(protos),
        spans=tuple(result.spans),
        includes=tuple(result.includes),
    )


def parse_program(source: str, config: AnalysisConfig | None = None) -> ProgramModel:
    """Parse C source text into a :class:`ProgramModel`.

    Raises ``CSyntaxError``, ``UnsupportedConstruct`` or ``MissingMain``.
    """
    config = config or AnalysisConfig()
    parser = Parser(source)
    result = parser.parse_program()
    return build_model(source, result, parser, config)
