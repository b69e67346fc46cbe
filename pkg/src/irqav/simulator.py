"""Bounded exhaustive interleaving explorer.

Programs are interpreted concretely under priority-preemptive interrupt
semantics. Each task instance runs as a generator that yields requests
(read, write, branch, intrinsic) to the scheduler; the scheduler applies
them, so every preemption point falls exactly between two effects.

Exploration is stateless: every trace re-executes the program from the
initial state following a prefix of recorded choices, and the next prefix
is obtained by depth-first backtracking over the last open choice.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Generator, Iterable, Iterator

from .access import AccessEvent, AccessMatrix, analyze_accesses
from .config import AnalysisConfig, SimConfig
from .errors import SimulationError, TraceBudgetExceeded
from .highlighter import PATTERNS, CandidateViolation
from .model import syntax as S
from .model.parser import c_div, fold_binary
from .model.program import IndexClass, ProgramModel, VarPath

_INT_BITS = {"char": 8, "short": 16, "int": 32, "long": 64}


def _wrap(base: str, v: int) -> int:
    """Reduce ``v`` to the range of the C type named ``base`` (e.g. "unsigned char")."""
    words = base.split()
    bits = _INT_BITS.get(words[-1], 32)
    v &= (1 << bits) - 1
    if words[0] != "unsigned" and v >= 1 << (bits - 1):
        v -= 1 << bits
    return v


# -- requests yielded by task generators -------------------------------------


@dataclass(frozen=True)
class Read:
    function: str
    nid: int
    line: int
    var: VarPath


@dataclass(frozen=True)
class Write:
    function: str
    nid: int
    line: int
    var: VarPath
    value: Any


@dataclass(frozen=True)
class Branch:
    function: str
    line: int
    taken: bool


@dataclass(frozen=True)
class Control:
    function: str
    line: int
    kind: str  # Enable | Disable
    target: int


# -- trace records --------------------------------------------------------------


@dataclass(frozen=True)
class Step:
    instance: int
    task: str
    kind: str  # R | W | branch | ctl
    function: str
    line: int
    nid: int = -1
    var: VarPath | None = None
    enabled: frozenset[str] = frozenset()  # ISRs enabled just before the step


@dataclass
class Trace:
    index: int
    steps: list[Step]
    final_globals: dict[str, Any]
    choices: tuple[int, ...]
    truncated: bool = False

    def instances(self) -> dict[int, str]:
        return {s.instance: s.task for s in self.steps}


@dataclass(frozen=True)
class DynEvent:
    function: str
    line: int
    op: str
    nid: int

    @property
    def site(self) -> tuple[str, int, str]:
        return (self.function, self.nid, self.op)

    def to_json(self) -> dict:
        return {"function": self.function, "line": self.line, "op": self.op}


@dataclass(frozen=True)
class DynamicViolation:
    var: VarPath
    pattern: str
    a1: DynEvent
    a2: DynEvent
    a3: DynEvent
    task_low: str
    task_high: str
    prio_low: int
    prio_high: int
    witness: int = field(compare=False, default=0)

    @property
    def key(self) -> tuple:
        return (self.var.key, self.pattern, self.a1.site, self.a2.site, self.a3.site)

    @property
    def line_key(self) -> tuple:
        return (self.var.key, self.pattern, (self.a1.line, self.a1.op), (self.a2.line, self.a2.op), (self.a3.line, self.a3.op))

    def to_json(self) -> dict:
        return {
            "var": self.var.key,
            "pattern": self.pattern,
            "a1": self.a1.to_json(),
            "a2": self.a2.to_json(),
            "a3": self.a3.to_json(),
        }


# -- interpreter ------------------------------------------------------------------


class _Return(Exception):
    pass


_BREAK = "break"
_CONTINUE = "continue"


class _Frame:
    __slots__ = ("fn", "vars", "types")

    def __init__(self, fn, types):
        self.fn = fn
        self.vars: dict[str, Any] = {}
        self.types = types


class _Interp:
    """Expression and statement evaluation as request-yielding generators."""

    def __init__(self, model: ProgramModel, cfg: SimConfig, run: "_Run"):
        self.model = model
        self.cfg = cfg
        self.run = run
        self.gtypes = {g.name: g.ctype for g in model.globals}

    # values and locations -------------------------------------------------

    def _is_global(self, frame: _Frame, name: str) -> bool:
        return name not in frame.types and name in self.gtypes

    def _check_index(self, length: int | None, k: int, line: int) -> None:
        if length is None or not 0 <= k < length:
            raise SimulationError(f"line {line}: index {k} out of bounds (length {length})")

    def location(self, frame: _Frame, lv: S.Expr) -> Generator:
        """Evaluate an lvalue's address parts; returns a location tuple."""
        if isinstance(lv, S.Name):
            if self._is_global(frame, lv.id):
                return ("g", lv.id, None, None)
            return ("l", frame, lv.id, None)
        if isinstance(lv, S.Index):
            k = yield from self.eval(frame, lv.index)
            if self._is_global(frame, lv.base.id):
                self._check_index(self.gtypes[lv.base.id].array_len, k, lv.line)
                return ("g", lv.base.id, k, None)
            self._check_index(frame.types[lv.base.id].array_len, k, lv.line)
            return ("l", frame, lv.base.id, k)
        if isinstance(lv, S.Field):
            if self._is_global(frame, lv.base.id):
                return ("g", lv.base.id, None, lv.name)
            return ("l", frame, lv.base.id, lv.name)
        if isinstance(lv, S.Deref):
            p = yield from self.eval(frame, lv.operand)
            if not isinstance(p, tuple):
                raise SimulationError(f"line {lv.line}: dereference of a non-pointer value {p!r}")
            return p
        raise SimulationError(f"line {lv.line}: not an lvalue")

    def _ctype_of(self, loc: tuple) -> str:
        if loc[0] == "g":
            return self.gtypes[loc[1]].base
        return loc[1].types[loc[2]].base

    def load(self, loc: tuple, fn: str, node) -> Generator:
        if loc[0] == "g":
            var = VarPath(loc[1], loc[2], loc[3])
            return (yield Read(fn, node.nid, node.line, var))
        _, frame, name, sel = loc
        v = frame.vars[name]
        if sel is None:
            return v
        return v[sel]

    def store(self, loc: tuple, value: Any, fn: str, node) -> Generator:
        if isinstance(value, int):
            base = self._ctype_of(loc)
            if not base.startswith("struct"):
                value = _wrap(base, value)
        if loc[0] == "g":
            yield Write(fn, node.nid, node.line, VarPath(loc[1], loc[2], loc[3]), value)
            return value
        _, frame, name, sel = loc
        if sel is None:
            frame.vars[name] = value
        else:
            frame.vars[name][sel] = value
        return value

    # expressions -------------------------------------------------------------

    def eval(self, frame: _Frame, e: S.Expr) -> Generator:
        fn = frame.fn.name
        if isinstance(e, S.IntLit):
            return e.value
        if isinstance(e, S.StrLit):
            return 0
        if isinstance(e, (S.Name, S.Index, S.Field, S.Deref)):
            loc = yield from self.location(frame, e)
            return (yield from self.load(loc, fn, e))
        if isinstance(e, S.AddrOf):
            loc = yield from self.location(frame, e.operand)
            return loc
        if isinstance(e, S.Cast):
            return (yield from self.eval(frame, e.operand))
        if isinstance(e, S.Unary):
            v = yield from self.eval(frame, e.operand)
            if e.op == "!":
                return int(not _truth(v))
            _need_int(v, e)
            return {"-": -v, "+": v, "~": ~v}[e.op]
        if isinstance(e, S.Binary):
            a = yield from self.eval(frame, e.left)
            b = yield from self.eval(frame, e.right)
            return _binary(e, a, b)
        if isinstance(e, S.Logical):
            a = yield from self.eval(frame, e.left)
            if e.op == "&&" and not _truth(a):
                return 0
            if e.op == "||" and _truth(a):
                return 1
            b = yield from self.eval(frame, e.right)
            return int(_truth(b))
        if isinstance(e, S.Cond):
            t = yield from self.eval(frame, e.test)
            return (yield from self.eval(frame, e.then if _truth(t) else e.other))
        if isinstance(e, S.Assign):
            v = yield from self.eval(frame, e.value)
            loc = yield from self.location(frame, e.target)
            if e.op != "=":
                old = yield from self.load(loc, fn, e.target)
                v = _binary_op(e.op[:-1], old, v, e)
            return (yield from self.store(loc, v, fn, e.target))
        if isinstance(e, S.IncDec):
            loc = yield from self.location(frame, e.target)
            old = yield from self.load(loc, fn, e.target)
            _need_int(old, e)
            new = old + 1 if e.op == "++" else old - 1
            new = yield from self.store(loc, new, fn, e.target)
            return new if e.prefix else old
        if isinstance(e, S.Call):
            args = []
            for a in e.args:
                args.append((yield from self.eval(frame, a)))
            enable, disable = self.model.intrinsics
            if e.name in enable or e.name in disable:
                if len(args) != 1 or not isinstance(args[0], int):
                    raise SimulationError(f"line {e.line}: {e.name} expects one integer argument")
                yield Control(fn, e.line, "Enable" if e.name in enable else "Disable", args[0])
                return 0
            if self.model.has_function(e.name):
                return (yield from self.call(e.name, args))
            return 0  # external call: no modelled effect
        raise SimulationError(f"line {e.line}: cannot evaluate {type(e).__name__}")

    # statements --------------------------------------------------------------

    def call(self, name: str, args: list) -> Generator:
        fd = self.model.function(name)
        frame = _Frame(fd, fd.locals)
        for p, a in zip(fd.params, args):
            frame.vars[p.name] = a
        try:
            yield from self.stmt(frame, fd.body)
        except _Return as r:
            return r.args[0]
        return 0

    def _declare(self, frame: _Frame, d: S.VarDecl) -> Generator:
        t = d.type
        if t.kind == "array":
            vals = [0] * (t.array_len or 0)
            if isinstance(d.init, tuple):
                for i, e in enumerate(d.init):
                    vals[i] = yield from self.eval(frame, e)
            frame.vars[d.name] = vals
        elif t.kind == "struct":
            vals = {f: 0 for f in t.fields}
            if isinstance(d.init, tuple):
                for f, e in zip(t.fields, d.init):
                    vals[f] = yield from self.eval(frame, e)
            frame.vars[d.name] = vals
        else:
            v = 0 if t.kind != "pointer" else None
            if d.init is not None and not isinstance(d.init, tuple):
                v = yield from self.eval(frame, d.init)
                if isinstance(v, int) and t.kind == "scalar":
                    v = _wrap(t.base, v)
            frame.vars[d.name] = v

    def cond(self, frame: _Frame, u: S.Unit) -> Generator:
        v = yield from self.eval(frame, u.expr)
        taken = _truth(v)
        yield Branch(frame.fn.name, u.line, taken)
        return taken

    def stmt(self, frame: _Frame, s: S.Stmt) -> Generator:
        if isinstance(s, S.ExprStmt):
            yield from self.eval(frame, s.unit.expr)
        elif isinstance(s, S.DeclStmt):
            yield from self._declare(frame, s.unit.decl)
        elif isinstance(s, S.Return):
            v = 0
            if s.unit.expr is not None:
                v = yield from self.eval(frame, s.unit.expr)
            raise _Return(v)
        elif isinstance(s, S.Block):
            for c in s.stmts:
                sig = yield from self.stmt(frame, c)
                if sig is not None:
                    return sig
        elif isinstance(s, S.If):
            taken = yield from self.cond(frame, s.cond)
            branch = s.then if taken else s.other
            if branch is not None:
                return (yield from self.stmt(frame, branch))
        elif isinstance(s, S.While):
            n = 0
            while True:
                taken = yield from self.cond(frame, s.cond)
                if not taken:
                    break
                if n >= self.cfg.max_loop_iterations:
                    self.run.truncated = True
                    break
                n += 1
                sig = yield from self.stmt(frame, s.body)
                if sig == _BREAK:
                    break
        elif isinstance(s, S.For):
            if s.init is not None:
                if s.init.decl is not None:
                    yield from self._declare(frame, s.init.decl)
                else:
                    yield from self.eval(frame, s.init.expr)
            n = 0
            while True:
                if s.cond is not None:
                    taken = yield from self.cond(frame, s.cond)
                    if not taken:
                        break
                if n >= self.cfg.max_loop_iterations:
                    self.run.truncated = True
                    break
                n += 1
                sig = yield from self.stmt(frame, s.body)
                if sig == _BREAK:
                    break
                if s.step is not None:
                    yield from self.eval(frame, s.step.expr)
        elif isinstance(s, S.Break):
            return _BREAK
        elif isinstance(s, S.Continue):
            return _CONTINUE
        return None

    def task(self, name: str) -> Generator:
        yield from self.call(name, [])


def _truth(v: Any) -> bool:
    return v is not None and v != 0


def _need_int(v: Any, e) -> None:
    if not isinstance(v, int):
        raise SimulationError(f"line {e.line}: arithmetic on a pointer value")


def _binary(e: S.Binary, a: Any, b: Any) -> Any:
    if e.op in ("==", "!="):
        if isinstance(a, tuple) or isinstance(b, tuple) or a is None or b is None:
            same = _ptr_eq(a, b)
            return int(same if e.op == "==" else not same)
    return _binary_op(e.op, a, b, e)


def _ptr_eq(a: Any, b: Any) -> bool:
    norm = lambda v: None if v == 0 else v  # noqa: E731
    a, b = norm(a), norm(b)
    if isinstance(a, tuple) and isinstance(b, tuple):
        return a[0] == b[0] and a[1] is b[1] if a[0] == "l" else a == b
    return a is b


def _binary_op(op: str, a: Any, b: Any, e) -> int:
    _need_int(a, e)
    _need_int(b, e)
    try:
        if op == "/":
            return c_div(a, b)
        if op == "%":
            return a - c_div(a, b) * b
        if op in ("<<", ">>") and b < 0:
            raise SimulationError(f"line {e.line}: negative shift count")
        return fold_binary(op, a, b)
    except ZeroDivisionError:
        raise SimulationError(f"line {e.line}: division by zero") from None


# -- scheduler --------------------------------------------------------------------


_END = object()  # main's last boundary, performed after its final step


class _Instance:
    __slots__ = ("id", "task", "prio", "gen", "fetched", "started", "req", "reply")

    def __init__(self, iid: int, task: str, prio: int, gen):
        self.id = iid
        self.task = task
        self.prio = prio
        self.gen = gen
        self.fetched = False
        self.started = False
        self.req: Any = None
        self.reply: Any = None


class _Run:
    def __init__(self, model: ProgramModel, cfg: SimConfig, config: AnalysisConfig, respect_enable: bool, prefix: list[int]):
        self.model = model
        self.cfg = cfg
        self.respect = respect_enable
        self.prefix = prefix
        self.decisions: list[tuple[int, int]] = []
        self.truncated = False
        self.interp = _Interp(model, cfg, self)
        init = config.initial_irq_state == "enabled"
        self.isrs = [t for t in model.tasks if t != "main"]
        self.enabled = {t: init for t in self.isrs}
        self.firings = {t: 0 for t in self.isrs}
        self.globals: dict[str, Any] = {}
        for g in model.globals:
            if g.kind == "array":
                self.globals[g.name] = list(g.initial)  # type: ignore[arg-type]
            elif g.kind == "struct":
                self.globals[g.name] = dict(zip(g.fields, g.initial))  # type: ignore[arg-type]
            elif g.kind == "pointer":
                v = g.initial
                if isinstance(v, VarPath):
                    idx = v.index.lo if isinstance(v.index, IndexClass) else v.index
                    v = ("g", v.base, idx, v.field)
                self.globals[g.name] = v
            else:
                self.globals[g.name] = g.initial
        self.steps: list[Step] = []
        self.stack: list[_Instance] = []
        self._ids = 0

    def choose(self, n: int) -> int:
        k = len(self.decisions)
        c = self.prefix[k] if k < len(self.prefix) else 0
        self.decisions.append((c, n))
        return c

    def _read_global(self, v: VarPath) -> Any:
        cur = self.globals[v.base]
        if v.field is not None:
            return cur[v.field]
        if v.index is not None:
            return cur[v.index]
        return cur

    def _write_global(self, v: VarPath, value: Any) -> None:
        if v.field is not None:
            self.globals[v.base][v.field] = value
        elif v.index is not None:
            self.globals[v.base][v.index] = value
        else:
            self.globals[v.base] = value

    def _spawn(self, task: str) -> None:
        self._ids += 1
        self.stack.append(_Instance(self._ids, task, self.model.priority(task), self.interp.task(task)))
        if task != "main":
            self.firings[task] += 1

    def boundary(self) -> bool:
        """Offer preemption: continue, or fire one eligible ISR (ascending priority)."""
        top = self.stack[-1]
        options = [
            t
            for t in self.isrs
            if self.model.priority(t) > top.prio
            and self.firings[t] < self.cfg.max_firings_per_isr
            and (self.enabled[t] or not self.respect)
        ]
        if not options:
            return False
        c = self.choose(len(options) + 1)
        if c == 0:
            return False
        self._spawn(options[c - 1])
        return True

    def perform(self, inst: _Instance, req: Any) -> Any:
        en = frozenset(t for t, on in self.enabled.items() if on)
        if isinstance(req, Read):
            try:
                value = self._read_global(req.var)
            except (IndexError, KeyError):
                raise SimulationError(f"line {req.line}: bad access to {req.var}") from None
            self.steps.append(Step(inst.id, inst.task, "R", req.function, req.line, req.nid, req.var, en))
            return value
        if isinstance(req, Write):
            self._write_global(req.var, req.value)
            self.steps.append(Step(inst.id, inst.task, "W", req.function, req.line, req.nid, req.var, en))
            return None
        if isinstance(req, Branch):
            self.steps.append(Step(inst.id, inst.task, "branch", req.function, req.line, enabled=en))
            return None
        if isinstance(req, Control):
            if req.target == -1:
                targets = self.isrs
            else:
                targets = [t for t in self.isrs if self.model.priority(t) == req.target]
                if not targets:
                    raise SimulationError(f"line {req.line}: no ISR with id {req.target}")
            for t in targets:
                self.enabled[t] = req.kind == "Enable"
            self.steps.append(Step(inst.id, inst.task, "ctl", req.function, req.line, enabled=en))
            return None
        raise SimulationError(f"unexpected request {req!r}")  # pragma: no cover

    def execute(self) -> None:
        self._spawn("main")
        while self.stack:
            inst = self.stack[-1]
            if inst.req is None:
                try:
                    inst.req = inst.gen.send(inst.reply) if inst.fetched else next(inst.gen)
                    inst.fetched = True
                except StopIteration:
                    if inst.task == "main" and inst.started:
                        inst.req = _END
                    else:
                        self._finish()
                        continue
                # no boundary before an instance's first step
                if inst.started and self.boundary():
                    continue
            if inst.req is _END:
                self._finish()
                continue
            inst.reply = self.perform(inst, inst.req)
            inst.req = None
            inst.started = True

    def _finish(self) -> None:
        self.stack.pop()
        # the preempted task's boundary is offered again
        if self.stack:
            self.boundary()


def enumerate_traces(
    model: ProgramModel,
    cfg: SimConfig | None = None,
    respect_enable: bool = True,
    config: AnalysisConfig | None = None,
) -> Iterator[Trace]:
    """Depth-first enumeration of all interleavings within the bounds.

    With ``respect_enable=False`` ISRs may fire regardless of the concrete
    enable flags. Raises :class:`TraceBudgetExceeded` once ``max_traces``
    traces have been produced and more remain.
    """
    cfg = cfg or (config.sim if config else SimConfig())
    config = config or AnalysisConfig()
    prefix: list[int] = []
    count = 0
    while True:
        run = _Run(model, cfg, config, respect_enable, prefix)
        run.execute()
        yield Trace(count, run.steps, _snapshot(run.globals), tuple(c for c, _ in run.decisions), run.truncated)
        count += 1
        decisions = list(run.decisions)
        while decisions and decisions[-1][0] + 1 >= decisions[-1][1]:
            decisions.pop()
        if not decisions:
            return
        if count >= cfg.max_traces:
            raise TraceBudgetExceeded(cfg.max_traces)
        prefix = [c for c, _ in decisions[:-1]] + [decisions[-1][0] + 1]


def _snapshot(g: dict[str, Any]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for k, v in g.items():
        if isinstance(v, list):
            out[k] = list(v)
        elif isinstance(v, dict):
            out[k] = dict(v)
        elif isinstance(v, tuple):
            out[k] = f"&{VarPath(v[1], v[2], v[3])}" if v[0] == "g" else "&<local>"
        else:
            out[k] = v
    return out


# -- violation detection ------------------------------------------------------------


def _violations_in(trace: Trace, prio: dict[str, int]) -> Iterator[DynamicViolation]:
    by_var: dict[tuple, list[tuple[int, Step]]] = {}
    for pos, s in enumerate(trace.steps):
        if s.var is not None:
            by_var.setdefault((s.var.base, s.var.index, s.var.field), []).append((pos, s))
    for seq in by_var.values():
        last: dict[int, int] = {}  # instance -> index into seq of its latest access
        for j, (pos, s) in enumerate(seq):
            i = last.get(s.instance)
            last[s.instance] = j
            if i is None or j - i < 2:
                continue
            a1 = seq[i][1]
            for _, mid in seq[i + 1 : j]:
                tag = a1.kind + mid.kind + s.kind
                if tag not in PATTERNS:
                    continue
                yield DynamicViolation(
                    s.var,  # type: ignore[arg-type]
                    tag,
                    DynEvent(a1.function, a1.line, a1.kind, a1.nid),
                    DynEvent(mid.function, mid.line, mid.kind, mid.nid),
                    DynEvent(s.function, s.line, s.kind, s.nid),
                    s.task,
                    mid.task,
                    prio[s.task],
                    prio[mid.task],
                    trace.index,
                )


def detect_dynamic(traces: Iterable[Trace], model: ProgramModel | None = None) -> list[DynamicViolation]:
    """Violation triples observed in the traces, deduplicated and sorted."""
    found: dict[tuple, DynamicViolation] = {}
    prio: dict[str, int] = dict(model.isr_table) if model is not None else {}
    for t in traces:
        if model is None:
            for s in t.steps:
                prio.setdefault(s.task, 0 if s.task == "main" else len(prio) + 1)
        for v in _violations_in(t, prio):
            found.setdefault(v.key, v)
    return sorted(found.values(), key=_dyn_sort)


def _dyn_sort(v: DynamicViolation) -> tuple:
    return (v.var.key, PATTERNS.index(v.pattern), v.a1.line, v.a1.op, v.a3.line, v.a3.op, v.a2.line, v.a2.op, v.a2.function, str(v.var))


@dataclass
class SimResult:
    violations: list[DynamicViolation]
    traces: int
    complete: bool
    truncated: bool

    def line_keys(self) -> set[tuple]:
        return {v.line_key for v in self.violations}


def simulate(
    model: ProgramModel,
    cfg: SimConfig | None = None,
    respect_enable: bool = True,
    config: AnalysisConfig | None = None,
) -> SimResult:
    """Enumerate traces and collect violations, tolerating budget exhaustion."""
    count = 0
    truncated = False
    complete = True
    found: dict[tuple, DynamicViolation] = {}
    prio = dict(model.isr_table)
    try:
        for t in enumerate_traces(model, cfg, respect_enable, config):
            count += 1
            truncated = truncated or t.truncated
            for v in _violations_in(t, prio):
                found.setdefault(v.key, v)
    except TraceBudgetExceeded:
        complete = False
    return SimResult(sorted(found.values(), key=_dyn_sort), count, complete, truncated)


def static_site_map(matrix: AccessMatrix) -> dict[tuple[str, int, str], list[AccessEvent]]:
    out: dict[tuple[str, int, str], list[AccessEvent]] = {}
    for e in matrix.events:
        out.setdefault(e.site, []).append(e)
    return out


def to_static(ev: DynEvent, var: VarPath, sites: dict[tuple[str, int, str], list[AccessEvent]]) -> AccessEvent | None:
    """The static access event a dynamic one was produced by."""
    for cand in sites.get(ev.site, ()):
        v = cand.var
        if v.base != var.base or v.field != var.field:
            continue
        if isinstance(v.index, IndexClass) and isinstance(var.index, int) and not v.index.contains(var.index):
            continue
        return cand
    return None


def covered_by(dyn: DynamicViolation, candidates: Iterable[CandidateViolation], matrix: AccessMatrix) -> bool:
    sites = static_site_map(matrix)
    s1, s2, s3 = (to_static(e, dyn.var, sites) for e in (dyn.a1, dyn.a2, dyn.a3))
    if s1 is None or s2 is None or s3 is None:
        return False
    want = (dyn.pattern, s1.ident, s2.ident, s3.ident)
    return any((c.pattern, c.a1.ident, c.a2.ident, c.a3.ident) == want for c in candidates)


def dump_violations(vs: Iterable[DynamicViolation]) -> str:
    return json.dumps([v.to_json() for v in vs], indent=2, sort_keys=True)


def simulate_source(source: str, config: AnalysisConfig | None = None) -> SimResult:
    from .model import parse_program

    config = config or AnalysisConfig()
    model = parse_program(source, config)
    analyze_accesses(model)  # surfaces frontend problems early
    return simulate(model, config.sim, True, config)
