"""Operation analysis: the global access matrix, entry set and call graph.

Every read or write of a global (direct, through an array element, a struct
field or a resolved pointer) becomes an :class:`AccessEvent`. Compound
operations are decomposed with a fixed evaluation order shared with the
simulator: the right-hand side first, then the lvalue's own subexpressions,
then the read of the target (for ``op=``/``++``/``--``), then the write.

Besides the flat matrix, each evaluation unit keeps an item sequence
(accesses, calls, interrupt intrinsics, conditional alternatives) from which
the per-task graphs in :mod:`irqav.taskgraph` are built.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Union

from .model import syntax as S
from .model.parser import fold_binary
from .model.program import FunctionDef, IndexClass, ProgramModel, VarPath


@dataclass(frozen=True, order=True)
class AccessEvent:
    line: int
    ordinal: int
    micro: int
    function: str
    op: str  # "R" | "W"
    var: VarPath = field(compare=False)
    col: int = field(compare=False, default=0)
    nid: int = field(compare=False, default=0)
    optional: bool = field(compare=False, default=False)

    @property
    def loc(self) -> tuple[int, int, int, int]:
        return (self.line, self.col, self.ordinal, self.micro)

    @property
    def site(self) -> tuple[str, int, str]:
        """Identity of the code location, shared with the simulator's dynamic events."""
        return (self.function, self.nid, self.op)

    @property
    def ident(self) -> tuple:
        return (self.function, self.nid, self.op, str(self.var))

    def short(self) -> str:
        return f"{self.op}({self.var})@{self.function}:{self.line}"

    def to_json(self) -> dict:
        return {
            "fn": self.function,
            "op": self.op,
            "var": str(self.var),
            "line": self.line,
            "col": self.col,
            "ord": [self.ordinal, self.micro],
        }


# -- unit item sequences -------------------------------------------------------


@dataclass(frozen=True)
class Acc:
    events: tuple[AccessEvent, ...]


@dataclass(frozen=True)
class CallItem:
    callee: str
    nid: int
    line: int


@dataclass(frozen=True)
class CtlItem:
    kind: str  # "Enable" | "Disable"
    target: int | None  # None when the argument is not a constant
    nid: int
    line: int
    function: str


@dataclass(frozen=True)
class Alt:
    branches: tuple[tuple["Item", ...], ...]


Item = Union[Acc, CallItem, CtlItem, Alt]


@dataclass(frozen=True)
class CallEdge:
    caller: str
    callee: str
    line: int


@dataclass(frozen=True)
class ExternalCall:
    caller: str
    name: str
    line: int


@dataclass(frozen=True)
class CallGraph:
    nodes: tuple[str, ...]
    edges: tuple[CallEdge, ...]
    externals: tuple[ExternalCall, ...]

    def callees(self, fn: str) -> list[str]:
        out: list[str] = []
        for e in self.edges:
            if e.caller == fn and e.callee not in out:
                out.append(e.callee)
        return out

    @property
    def has_interfunction_edges(self) -> bool:
        return bool(self.edges)


@dataclass(frozen=True)
class EntrySet:
    functions: tuple[str, ...]

    def __contains__(self, name: object) -> bool:
        return name in self.functions

    def __iter__(self):
        return iter(self.functions)

    def __len__(self) -> int:
        return len(self.functions)


@dataclass(frozen=True)
class AccessMatrix:
    events: tuple[AccessEvent, ...]
    unit_items: dict[tuple[str, int], tuple[Item, ...]]
    points_to: dict[int, frozenset[VarPath]]
    diagnostics: tuple[str, ...]

    def for_function(self, fn: str) -> list[AccessEvent]:
        return [e for e in self.events if e.function == fn]

    def for_var(self, base: str) -> list[AccessEvent]:
        return [e for e in self.events if e.var.base == base]

    def counts(self, key: str) -> tuple[int, int]:
        evs = [e for e in self.events if e.var.key == key or e.var.base == key]
        return sum(e.op == "R" for e in evs), sum(e.op == "W" for e in evs)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_json(), sort_keys=True) + "\n" for e in self.events)


# -- points-to -----------------------------------------------------------------

_LOCAL = "<local>"


class PointsTo:
    """Flow-insensitive inclusion-based points-to over pointer variables.

    Locations are ``("g", name)`` for global pointers, ``("l", fn, name)``
    for locals and parameters and ``("ret", fn)`` for returned pointers.
    Targets are global :class:`VarPath` objects or a ``("local", fn, name)``
    marker for addresses of locals.
    """

    def __init__(self, model: ProgramModel, classify):
        self.model = model
        self.classify = classify
        self.base: dict[tuple, set] = {}
        self.copy: dict[tuple, set[tuple]] = {}  # dst <- srcs
        self.pts: dict[tuple, frozenset] = {}
        self._collect()
        self._solve()

    def loc_of(self, fn: FunctionDef, name: str) -> tuple | None:
        t = fn.locals.get(name)
        if t is not None:
            return ("l", fn.name, name) if t.kind == "pointer" else None
        g = self.model.global_var(name)
        if g is not None and g.kind == "pointer":
            return ("g", name)
        return None

    def address(self, fn: FunctionDef, lv: S.Expr):
        if isinstance(lv, S.Name):
            if lv.id in fn.locals:
                return ("local", fn.name, lv.id)
            return VarPath(lv.id)
        if isinstance(lv, S.Field):
            return VarPath(lv.base.id, field=lv.name)
        if isinstance(lv, S.Index):
            if lv.base.id in fn.locals:
                return ("local", fn.name, lv.base.id)
            return VarPath(lv.base.id, index=self.classify(fn, lv))
        return None

    def flows(self, fn: FunctionDef, e: S.Expr | None) -> tuple[set, set[tuple]]:
        """(direct targets, source locations) that an expression's pointer value may come from."""
        if e is None:
            return set(), set()
        if isinstance(e, S.Name):
            loc = self.loc_of(fn, e.id)
            return set(), ({loc} if loc else set())
        if isinstance(e, S.AddrOf):
            a = self.address(fn, e.operand)
            return ({a} if a is not None else set()), set()
        if isinstance(e, S.Cond):
            t1, s1 = self.flows(fn, e.then)
            t2, s2 = self.flows(fn, e.other)
            return t1 | t2, s1 | s2
        if isinstance(e, S.Cast):
            return self.flows(fn, e.operand)
        if isinstance(e, S.Assign) and e.op == "=":
            return self.flows(fn, e.value)
        if isinstance(e, S.Call) and self.model.has_function(e.name):
            callee = self.model.function(e.name)
            if callee.return_type.kind == "pointer":
                return set(), {("ret", e.name)}
        return set(), set()

    def _add(self, dst: tuple, fn: FunctionDef, e: S.Expr | None) -> None:
        targets, srcs = self.flows(fn, e)
        self.base.setdefault(dst, set()).update(targets)
        self.copy.setdefault(dst, set()).update(srcs)

    def _collect(self) -> None:
        for g in self.model.globals:
            if g.kind == "pointer":
                self.base.setdefault(("g", g.name), set())
                if isinstance(g.initial, VarPath):
                    init = g.initial
                    if isinstance(init.index, int):
                        init = VarPath(init.base, IndexClass.constant(init.index))
                    self.base[("g", g.name)].add(init)
        for fn in self.model.functions:
            for u in S.iter_units(fn.body):
                if u.decl is not None and u.decl.type.kind == "pointer" and not isinstance(u.decl.init, tuple):
                    self._add(("l", fn.name, u.decl.name), fn, u.decl.init)
                if u.kind == "return" and fn.return_type.kind == "pointer":
                    self._add(("ret", fn.name), fn, u.expr)
                for e in S.unit_exprs(u):
                    for sub in S.walk_expr(e):
                        if isinstance(sub, S.Assign) and isinstance(sub.target, S.Name):
                            loc = self.loc_of(fn, sub.target.id)
                            if loc is not None:
                                self._add(loc, fn, sub.value)
                        elif isinstance(sub, S.Call) and self.model.has_function(sub.name):
                            callee = self.model.function(sub.name)
                            for p, a in zip(callee.params, sub.args):
                                if p.type.kind == "pointer":
                                    self._add(("l", callee.name, p.name), fn, a)

    def _solve(self) -> None:
        pts = {k: set(v) for k, v in self.base.items()}
        changed = True
        while changed:
            changed = False
            for dst, srcs in self.copy.items():
                cur = pts.setdefault(dst, set())
                before = len(cur)
                for s in srcs:
                    cur |= pts.get(s, set())
                if len(cur) != before:
                    changed = True
        self.pts = {k: frozenset(v) for k, v in pts.items()}

    def targets(self, fn: FunctionDef, e: S.Expr) -> frozenset:
        direct, srcs = self.flows(fn, e)
        out = set(direct)
        for s in srcs:
            out |= self.pts.get(s, frozenset())
        return frozenset(out)


# -- interval / constant classification of array indices ---------------------


_INF = None


def _iv_add(a, b):
    return (None if a[0] is None or b[0] is None else a[0] + b[0], None if a[1] is None or b[1] is None else a[1] + b[1])


def _iv_neg(a):
    return (None if a[1] is None else -a[1], None if a[0] is None else -a[0])


def _iv_mul_const(a, k: int):
    if k == 0:
        return (0, 0)
    lo, hi = a
    if k < 0:
        lo, hi = _iv_neg(a)
        k = -k
    return (None if lo is None else lo * k, None if hi is None else hi * k)


class IndexAnalyzer:
    """Constant propagation and interval analysis for index expressions.

    Handles literals and folded constant expressions, locals whose every
    definition is a constant, ``for`` induction variables with constant
    bounds, and constant-comparison guards on locals. Everything else is
    unknown.
    """

    def __init__(self, model: ProgramModel):
        self.model = model
        self._defs: dict[str, dict[str, tuple | None]] = {}
        self._loop_ranges: dict[str, dict[int, dict[str, tuple]]] = {}
        self._guards: dict[str, dict[int, dict[str, tuple]]] = {}
        for fn in model.functions:
            self._scan(fn)

    # per-function pre-pass ------------------------------------------------

    def _scan(self, fn: FunctionDef) -> None:
        defs: dict[str, list] = {p.name: [None] for p in fn.params}
        addr_taken: set[str] = set()
        for u in S.iter_units(fn.body):
            if u.decl is not None and u.decl.type.kind == "scalar":
                init = u.decl.init
                defs.setdefault(u.decl.name, [])
                if init is not None and not isinstance(init, tuple):
                    defs[u.decl.name].append(self._const(init))
            for e in S.unit_exprs(u):
                for sub in S.walk_expr(e):
                    if isinstance(sub, S.Assign) and isinstance(sub.target, S.Name) and sub.target.id in fn.locals:
                        v = self._const(sub.value) if sub.op == "=" else None
                        defs.setdefault(sub.target.id, []).append(v)
                    elif isinstance(sub, S.IncDec) and isinstance(sub.target, S.Name) and sub.target.id in fn.locals:
                        defs.setdefault(sub.target.id, []).append(None)
                    elif isinstance(sub, S.AddrOf) and isinstance(sub.operand, S.Name):
                        addr_taken.add(sub.operand.id)
        summary: dict[str, tuple | None] = {}
        for name, vals in defs.items():
            if name in addr_taken or not vals or any(v is None for v in vals):
                summary[name] = None
            else:
                summary[name] = (min(vals), max(vals))
        self._defs[fn.name] = summary
        loops: dict[int, dict[str, tuple]] = {}
        guards: dict[int, dict[str, tuple]] = {}
        self._walk(fn, fn.body, {}, {}, loops, guards, addr_taken)
        self._loop_ranges[fn.name] = loops
        self._guards[fn.name] = guards

    def _const(self, e) -> int | None:
        if isinstance(e, S.IntLit):
            return e.value
        if isinstance(e, (S.Unary,)) and e.op in "-+":
            v = self._const(e.operand)
            return None if v is None else (-v if e.op == "-" else v)
        if isinstance(e, S.Cast):
            return self._const(e.operand)
        if isinstance(e, S.Binary):
            a, b = self._const(e.left), self._const(e.right)
            if a is None or b is None:
                return None
            try:
                return fold_binary(e.op, a, b)
            except ZeroDivisionError:
                return None
        return None

    def _assigned_in(self, s, name: str) -> bool:
        for u in S.iter_units(s):
            if u.decl is not None and u.decl.name == name:
                return True
            for e in S.unit_exprs(u):
                for sub in S.walk_expr(e):
                    if isinstance(sub, S.Assign) and isinstance(sub.target, S.Name) and sub.target.id == name:
                        return True
                    if isinstance(sub, S.IncDec) and isinstance(sub.target, S.Name) and sub.target.id == name:
                        return True
        return False

    def _induction(self, fn: FunctionDef, s: S.For, addr_taken: set[str]):
        """Return (var, (lo, hi)) valid inside the body of a counted loop, or None."""
        init, cond, step = s.init, s.cond, s.step
        if init is None or cond is None or step is None:
            return None
        if init.decl is not None:
            var, start = init.decl.name, self._const(init.decl.init) if not isinstance(init.decl.init, tuple) else None
        elif isinstance(init.expr, S.Assign) and init.expr.op == "=" and isinstance(init.expr.target, S.Name):
            var, start = init.expr.target.id, self._const(init.expr.value)
        else:
            return None
        if start is None or var not in fn.locals or var in addr_taken:
            return None
        direction = _step_direction(step.expr, var)
        if direction is None:
            return None
        c = cond.expr
        if not isinstance(c, S.Binary):
            return None
        if isinstance(c.left, S.Name) and c.left.id == var:
            op, bound = c.op, self._const(c.right)
        elif isinstance(c.right, S.Name) and c.right.id == var:
            op, bound = _flip(c.op), self._const(c.left)
        else:
            return None
        if bound is None or self._assigned_in(s.body, var):
            return None
        if direction > 0 and op == "<":
            rng = (start, bound - 1)
        elif direction > 0 and op == "<=":
            rng = (start, bound)
        elif direction > 0 and op == "!=" and start <= bound:
            rng = (start, bound - 1)
        elif direction < 0 and op == ">":
            rng = (bound + 1, start)
        elif direction < 0 and op == ">=":
            rng = (bound, start)
        else:
            return None
        if rng[0] > rng[1]:
            return None
        return var, rng

    def _guard(self, cond: S.Expr, fn: FunctionDef, positive: bool) -> dict[str, tuple]:
        out: dict[str, tuple] = {}
        if isinstance(cond, S.Logical) and cond.op == "&&" and positive:
            for side in (cond.left, cond.right):
                for k, v in self._guard(side, fn, True).items():
                    out[k] = _meet(out.get(k, (None, None)), v)
            return out
        if isinstance(cond, S.Unary) and cond.op == "!":
            return self._guard(cond.operand, fn, not positive)
        if not isinstance(cond, S.Binary):
            return out
        if isinstance(cond.left, S.Name) and cond.left.id in fn.locals:
            var, op, k = cond.left.id, cond.op, self._const(cond.right)
        elif isinstance(cond.right, S.Name) and cond.right.id in fn.locals:
            var, op, k = cond.right.id, _flip(cond.op), self._const(cond.left)
        else:
            return out
        if k is None or fn.locals[var].kind != "scalar":
            return out
        if not positive:
            op = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "==": "!=", "!=": "=="}.get(op, "")
        rng = {"<": (None, k - 1), "<=": (None, k), ">": (k + 1, None), ">=": (k, None), "==": (k, k)}.get(op)
        if rng is not None:
            out[var] = rng
        return out

    def _walk(self, fn, s, loop_env, guard_env, loops, guards, addr_taken) -> None:
        if s is None:
            return
        if isinstance(s, (S.ExprStmt, S.DeclStmt, S.Return)):
            loops[s.unit.ordinal] = dict(loop_env)
            guards[s.unit.ordinal] = dict(guard_env)
        elif isinstance(s, S.Block):
            for c in s.stmts:
                self._walk(fn, c, loop_env, guard_env, loops, guards, addr_taken)
        elif isinstance(s, S.If):
            loops[s.cond.ordinal] = dict(loop_env)
            guards[s.cond.ordinal] = dict(guard_env)
            for branch, positive in ((s.then, True), (s.other, False)):
                if branch is None:
                    continue
                g = dict(guard_env)
                for var, rng in self._guard(s.cond.expr, fn, positive).items():
                    if not self._assigned_in(branch, var) and var not in addr_taken:
                        g[var] = _meet(g.get(var, (None, None)), rng)
                self._walk(fn, branch, loop_env, g, loops, guards, addr_taken)
        elif isinstance(s, S.While):
            loops[s.cond.ordinal] = dict(loop_env)
            guards[s.cond.ordinal] = dict(guard_env)
            g = {k: v for k, v in guard_env.items() if not self._assigned_in(s.body, k)}
            self._walk(fn, s.body, loop_env, g, loops, guards, addr_taken)
        elif isinstance(s, S.For):
            for u in (s.init, s.cond, s.step):
                if u is not None:
                    loops[u.ordinal] = dict(loop_env)
                    guards[u.ordinal] = dict(guard_env)
            ind = self._induction(fn, s, addr_taken)
            env = dict(loop_env)
            if ind is not None:
                env[ind[0]] = ind[1]
            g = {k: v for k, v in guard_env.items() if not self._assigned_in(s.body, k) and not (s.step and self._assigned_in_unit(s.step, k))}
            self._walk(fn, s.body, env, g, loops, guards, addr_taken)

    def _assigned_in_unit(self, u: S.Unit, name: str) -> bool:
        for e in S.unit_exprs(u):
            for sub in S.walk_expr(e):
                if isinstance(sub, (S.Assign, S.IncDec)) and isinstance(getattr(sub, "target", None), S.Name) and sub.target.id == name:
                    return True
        return False

    # queries -------------------------------------------------------------

    def value_range(self, fn: FunctionDef, ordinal: int, e: S.Expr) -> tuple:
        c = self._const(e)
        if c is not None:
            return (c, c)
        if isinstance(e, S.Name):
            if e.id not in fn.locals:
                return (None, None)  # globals may change under preemption
            rng = self._loop_ranges[fn.name].get(ordinal, {}).get(e.id)
            if rng is None:
                rng = self._defs[fn.name].get(e.id) or (None, None)
            guard = self._guards[fn.name].get(ordinal, {}).get(e.id)
            if guard is not None:
                rng = _meet(rng, guard)
            return rng
        if isinstance(e, S.Cast):
            return self.value_range(fn, ordinal, e.operand)
        if isinstance(e, S.Unary) and e.op == "-":
            return _iv_neg(self.value_range(fn, ordinal, e.operand))
        if isinstance(e, S.Unary) and e.op == "+":
            return self.value_range(fn, ordinal, e.operand)
        if isinstance(e, S.Binary) and e.op in ("+", "-", "*"):
            a = self.value_range(fn, ordinal, e.left)
            b = self.value_range(fn, ordinal, e.right)
            if e.op == "+":
                return _iv_add(a, b)
            if e.op == "-":
                return _iv_add(a, _iv_neg(b))
            kb, ka = self._const(e.right), self._const(e.left)
            if kb is not None:
                return _iv_mul_const(a, kb)
            if ka is not None:
                return _iv_mul_const(b, ka)
        return (None, None)

    def classify(self, fn: FunctionDef, ordinal: int, idx: S.Index) -> IndexClass:
        g = self.model.global_var(idx.base.id)
        length = g.length if g is not None and g.length else (fn.locals[idx.base.id].array_len if idx.base.id in fn.locals else 1)
        lo, hi = self.value_range(fn, ordinal, idx.index)
        if lo is None or hi is None:
            return IndexClass.unknown(length or 1)
        if lo == hi:
            return IndexClass.constant(lo)
        return IndexClass.interval(lo, hi)


def _meet(a: tuple, b: tuple) -> tuple:
    lo = b[0] if a[0] is None else (a[0] if b[0] is None else max(a[0], b[0]))
    hi = b[1] if a[1] is None else (a[1] if b[1] is None else min(a[1], b[1]))
    return (lo, hi)


def _flip(op: str) -> str:
    return {"<": ">", ">": "<", "<=": ">=", ">=": "<="}.get(op, op)


def _step_direction(e: S.Expr | None, var: str) -> int | None:
    if isinstance(e, S.IncDec) and isinstance(e.target, S.Name) and e.target.id == var:
        return 1 if e.op == "++" else -1
    if isinstance(e, S.Assign) and isinstance(e.target, S.Name) and e.target.id == var:
        if e.op in ("+=", "-=") and isinstance(e.value, S.IntLit) and e.value.value == 1:
            return 1 if e.op == "+=" else -1
        if e.op == "=" and isinstance(e.value, S.Binary) and e.value.op in ("+", "-"):
            v = e.value
            if isinstance(v.left, S.Name) and v.left.id == var and isinstance(v.right, S.IntLit) and v.right.value == 1:
                return 1 if v.op == "+" else -1
    return None


def classify_array_access(expr: S.Index, model: ProgramModel, function: str | None = None, ordinal: int | None = None) -> IndexClass:
    """Classify an indexing expression as constant, interval or unknown.

    ``function``/``ordinal`` locate the expression; when omitted the index is
    searched for in every function body.
    """
    analyzer = _index_analyzer(model)
    if function is None or ordinal is None:
        for fn in model.functions:
            for u in S.iter_units(fn.body):
                for e in S.unit_exprs(u):
                    for sub in S.walk_expr(e):
                        if sub is expr or (isinstance(sub, S.Index) and sub.nid == expr.nid):
                            return analyzer.classify(fn, u.ordinal, sub)
        raise KeyError("index expression not found in model")
    return analyzer.classify(model.function(function), ordinal, expr)


_ANALYZERS: dict[int, tuple[ProgramModel, IndexAnalyzer]] = {}


def _index_analyzer(model: ProgramModel) -> IndexAnalyzer:
    hit = _ANALYZERS.get(id(model))
    if hit is not None and hit[0] is model:
        return hit[1]
    a = IndexAnalyzer(model)
    _ANALYZERS[id(model)] = (model, a)
    return a


# -- event extraction -----------------------------------------------------------


class _Extractor:
    def __init__(self, model: ProgramModel):
        self.model = model
        self.index = _index_analyzer(model)
        self._unit: S.Unit | None = None
        self._fn: FunctionDef | None = None
        self.points_to = PointsTo(model, self._classify_any)
        self.deref_targets: dict[int, frozenset[VarPath]] = {}
        self.diagnostics: list[str] = []
        self.edges: list[CallEdge] = []
        self.externals: list[ExternalCall] = []

    def _classify_any(self, fn: FunctionDef, idx: S.Index) -> IndexClass:
        for u in S.iter_units(fn.body):
            for e in S.unit_exprs(u):
                for sub in S.walk_expr(e):
                    if isinstance(sub, S.Index) and sub.nid == idx.nid:
                        return self.index.classify(fn, u.ordinal, idx)
        return self.index.classify(fn, -1, idx)

    # helpers ------------------------------------------------------------------

    def is_global(self, name: str) -> bool:
        assert self._fn is not None
        return name not in self._fn.locals and self.model.global_var(name) is not None

    def ev(self, op: str, var: VarPath, node, optional: bool) -> AccessEvent:
        assert self._unit is not None and self._fn is not None
        return AccessEvent(self._unit.line if node is None else node.line, self._unit.ordinal, -1, self._fn.name, op, var, node.col, node.nid, optional)

    def deref_vars(self, d: S.Deref) -> list[VarPath]:
        assert self._fn is not None
        tgts = self.points_to.targets(self._fn, d.operand)
        globals_ = sorted((t for t in tgts if isinstance(t, VarPath)), key=str)
        self.deref_targets[d.nid] = frozenset(globals_)
        if not tgts:
            self.diagnostics.append(f"unresolved dereference at line {d.line} in {self._fn.name}")
        return globals_

    def target_vars(self, lv: S.Expr) -> list[VarPath]:
        """Globals possibly denoted by an lvalue (several for a multi-target deref)."""
        assert self._fn is not None and self._unit is not None
        if isinstance(lv, S.Name):
            return [VarPath(lv.id)] if self.is_global(lv.id) else []
        if isinstance(lv, S.Index):
            if not self.is_global(lv.base.id):
                return []
            return [VarPath(lv.base.id, self.index.classify(self._fn, self._unit.ordinal, lv))]
        if isinstance(lv, S.Field):
            return [VarPath(lv.base.id, field=lv.name)] if self.is_global(lv.base.id) else []
        if isinstance(lv, S.Deref):
            return self.deref_vars(lv)
        return []

    def lvalue_prefix(self, lv: S.Expr, optional: bool) -> list:
        if isinstance(lv, S.Index):
            return self.items(lv.index, optional)
        if isinstance(lv, S.Deref):
            return self.items(lv.operand, optional)
        return []

    def acc(self, op: str, lv: S.Expr, node, optional: bool) -> list:
        evs = tuple(self.ev(op, v, node, optional) for v in self.target_vars(lv))
        return [Acc(evs)] if evs else []

    # expression walker ---------------------------------------------------------

    def items(self, e: S.Expr | None, optional: bool = False) -> list:
        if e is None or isinstance(e, (S.IntLit, S.StrLit)):
            return []
        if isinstance(e, S.Name):
            return self.acc("R", e, e, optional)
        if isinstance(e, S.Index):
            return self.items(e.index, optional) + self.acc("R", e, e, optional)
        if isinstance(e, S.Field):
            return self.acc("R", e, e, optional)
        if isinstance(e, S.Deref):
            return self.items(e.operand, optional) + self.acc("R", e, e, optional)
        if isinstance(e, S.AddrOf):
            return self.items(e.operand.index, optional) if isinstance(e.operand, S.Index) else []
        if isinstance(e, (S.Unary, S.Cast)):
            return self.items(e.operand, optional)
        if isinstance(e, S.Binary):
            return self.items(e.left, optional) + self.items(e.right, optional)
        if isinstance(e, S.Logical):
            right = self.items(e.right, True)
            return self.items(e.left, optional) + ([Alt((tuple(right), ()))] if right else [])
        if isinstance(e, S.Cond):
            a, b = self.items(e.then, True), self.items(e.other, True)
            return self.items(e.test, optional) + ([Alt((tuple(a), tuple(b)))] if a or b else [])
        if isinstance(e, S.Assign):
            out = self.items(e.value, optional) + self.lvalue_prefix(e.target, optional)
            if e.op != "=":
                out += self.acc("R", e.target, e.target, optional)
            return out + self.acc("W", e.target, e.target, optional)
        if isinstance(e, S.IncDec):
            return self.lvalue_prefix(e.target, optional) + self.acc("R", e.target, e.target, optional) + self.acc("W", e.target, e.target, optional)
        if isinstance(e, S.Call):
            return self.call(e, optional)
        raise TypeError(type(e))  # pragma: no cover

    def call(self, e: S.Call, optional: bool) -> list:
        assert self._fn is not None
        out: list = []
        for a in e.args:
            out += self.items(a, optional)
            if isinstance(a, (S.Name, S.Index, S.Field)) and self.target_vars(a) and self.model.has_function(e.name):
                self.diagnostics.append(
                    f"global {a.base.id if isinstance(a, (S.Index, S.Field)) else a.id} passed by value to {e.name} at line {e.line}: read recorded at the call site"
                )
        enable, disable = self.model.intrinsics
        if e.name in enable or e.name in disable:
            kind = "Enable" if e.name in enable else "Disable"
            target = self.index._const(e.args[0]) if len(e.args) == 1 else None
            out.append(CtlItem(kind, target, e.nid, e.line, self._fn.name))
        elif self.model.has_function(e.name):
            self.edges.append(CallEdge(self._fn.name, e.name, e.line))
            out.append(CallItem(e.name, e.nid, e.line))
        else:
            self.externals.append(ExternalCall(self._fn.name, e.name, e.line))
        return out

    # driver -------------------------------------------------------------------

    def run(self):
        unit_items: dict[tuple[str, int], tuple] = {}
        events: list[AccessEvent] = []
        for fn in self.model.functions:
            self._fn = fn
            for u in S.iter_units(fn.body):
                self._unit = u
                raw: list = []
                for ex in S.unit_exprs(u):
                    raw += self.items(ex)
                numbered, _ = _number(tuple(raw), 0)
                unit_items[(fn.name, u.ordinal)] = numbered
                events.extend(_flatten_events(numbered))
        events.sort()
        return tuple(events), unit_items


def _number(items: tuple, start: int) -> tuple[tuple, int]:
    """Assign micro-ordinals to access items in evaluation order."""
    out = []
    k = start
    for it in items:
        if isinstance(it, Acc):
            out.append(Acc(tuple(_with_micro(e, k) for e in it.events)))
            k += 1
        elif isinstance(it, Alt):
            branches = []
            for br in it.branches:
                nb, k = _number(br, k)
                branches.append(nb)
            out.append(Alt(tuple(branches)))
        else:
            out.append(it)
    return tuple(out), k


def _with_micro(e: AccessEvent, k: int) -> AccessEvent:
    return AccessEvent(e.line, e.ordinal, k, e.function, e.op, e.var, e.col, e.nid, e.optional)


def _flatten_events(items: Iterable) -> list[AccessEvent]:
    out: list[AccessEvent] = []
    for it in items:
        if isinstance(it, Acc):
            out.extend(it.events)
        elif isinstance(it, Alt):
            for br in it.branches:
                out.extend(_flatten_events(br))
    return out


def iter_items(items: Iterable):
    """Depth-first iteration over items, descending into alternatives."""
    for it in items:
        yield it
        if isinstance(it, Alt):
            for br in it.branches:
                yield from iter_items(br)


def analyze_accesses(model: ProgramModel) -> tuple[AccessMatrix, EntrySet, CallGraph]:
    """Build the access matrix, the scheduling roots and the call graph."""
    ex = _Extractor(model)
    events, unit_items = ex.run()
    entry = EntrySet(tuple(model.tasks))
    edges = []
    seen = set()
    for e in ex.edges:
        if (e.caller, e.callee, e.line) not in seen:
            seen.add((e.caller, e.callee, e.line))
            edges.append(e)
    cg = CallGraph(tuple(f.name for f in model.functions), tuple(edges), tuple(dict.fromkeys(ex.externals)))
    matrix = AccessMatrix(events, unit_items, dict(ex.deref_targets), tuple(dict.fromkeys(ex.diagnostics)))
    return matrix, entry, cg


def resolve_pointer_targets(model: ProgramModel) -> dict[int, frozenset[VarPath]]:
    """Map each dereference site (by node id) to the globals it may touch."""
    matrix, _, _ = analyze_accesses(model)
    return dict(matrix.points_to)


def reachable_from(cg: CallGraph, roots: Iterable[str]) -> list[str]:
    """Functions reachable from ``roots`` in FIFO order (roots included)."""
    order: list[str] = []
    work = list(roots)
    seen: set[str] = set()
    while work:
        f = work.pop(0)
        if f in seen:
            continue
        seen.add(f)
        order.append(f)
        for c in cg.callees(f):
            if c not in seen:
                work.append(c)
    return order
