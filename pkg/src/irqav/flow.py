"""Interrupt enable/disable flow analysis.

Control points are the intrinsic call sites. The per-task state is a forward
dataflow over the task graph (callees inlined) on the three-point lattice
Enabled/Disabled/Unknown, one component per ISR.

Two modes are offered. The default is task-local: only the task's own control
points (and those of its callees) move the state. With ``interference=True``
the effects of every other task's control points are joined in everywhere,
since a preempting ISR may flip a flag at any boundary. Only the second mode
is a sound over-approximation of what the simulator can observe.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Iterable

from .access import AccessMatrix, CallGraph, CtlItem, ExternalCall, analyze_accesses
from .config import AnalysisConfig
from .model import syntax as S
from .model.program import ProgramModel
from .taskgraph import TaskGraph, build_task_graph


class IrqStatus(enum.Enum):
    ENABLED = "Enabled"
    DISABLED = "Disabled"
    UNKNOWN = "Unknown"

    def join(self, other: "IrqStatus") -> "IrqStatus":
        return self if self is other else IrqStatus.UNKNOWN

    def admits(self, enabled: bool) -> bool:
        if self is IrqStatus.UNKNOWN:
            return True
        return enabled == (self is IrqStatus.ENABLED)


ALL = -1


@dataclass(frozen=True)
class InterruptControlPoint:
    function: str
    line: int
    kind: str  # Enable | Disable
    target: int | None  # ISR id, -1 for all, None if not a constant

    def affects(self, isr_id: int) -> bool:
        return self.target is None or self.target == ALL or self.target == isr_id

    @property
    def effect(self) -> IrqStatus:
        if self.target is None:
            return IrqStatus.UNKNOWN
        return IrqStatus.ENABLED if self.kind == "Enable" else IrqStatus.DISABLED

    def to_json(self) -> dict:
        return {"fn": self.function, "line": self.line, "kind": self.kind, "target": self.target}


@dataclass(frozen=True)
class InterruptState:
    """Per-ISR status keyed by ISR name."""

    states: tuple[tuple[str, IrqStatus], ...]

    def __getitem__(self, isr: str) -> IrqStatus:
        return dict(self.states)[isr]

    def as_dict(self) -> dict[str, str]:
        return {k: v.value for k, v in self.states}

    def join(self, other: "InterruptState") -> "InterruptState":
        b = dict(other.states)
        return InterruptState(tuple((k, v.join(b[k])) for k, v in self.states))

    def is_disabled(self, isr: str) -> bool:
        return self[isr] is IrqStatus.DISABLED


def find_control_points(model: ProgramModel) -> list[InterruptControlPoint]:
    """One record per intrinsic call site, in source order."""
    enable, disable = model.intrinsics
    out = []
    for fn in model.functions:
        for u in S.iter_units(fn.body):
            for e in S.unit_exprs(u):
                for sub in S.walk_expr(e):
                    if isinstance(sub, S.Call) and (sub.name in enable or sub.name in disable):
                        out.append(_control_point(fn.name, sub, sub.name in enable))
    out.sort(key=lambda c: (c.line, c.function))
    return out


def _control_point(fn: str, call: S.Call, is_enable: bool) -> InterruptControlPoint:
    target = None
    if len(call.args) == 1:
        a = call.args[0]
        if isinstance(a, S.IntLit):
            target = a.value
        elif isinstance(a, S.Unary) and a.op == "-" and isinstance(a.operand, S.IntLit):
            target = -a.operand.value
    return InterruptControlPoint(fn, call.line, "Enable" if is_enable else "Disable", target)


def external_calls(cg: CallGraph) -> list[ExternalCall]:
    return list(cg.externals)


def _ctl_point(c: CtlItem) -> InterruptControlPoint:
    return InterruptControlPoint(c.function, c.line, c.kind, c.target)


class FlowAnalysis:
    """Interrupt state at every task-graph node, for both modes."""

    def __init__(self, model: ProgramModel, matrix: AccessMatrix, config: AnalysisConfig | None = None, graphs: dict[str, TaskGraph] | None = None):
        self.model = model
        self.config = config or AnalysisConfig()
        self.points = find_control_points(model)
        self.isrs = [t for t in model.tasks if t != "main"]
        self.graphs = graphs or {t: build_task_graph(model, matrix, t) for t in model.tasks}
        init = IrqStatus.ENABLED if self.config.initial_irq_state == "enabled" else IrqStatus.DISABLED
        self.initial = InterruptState(tuple((i, init) for i in self.isrs))
        # control points executed by each task (own body plus inlined callees)
        self.task_points: dict[str, list[InterruptControlPoint]] = {
            t: [_ctl_point(n.ctl) for n in g.nodes if n.ctl is not None] for t, g in self.graphs.items()
        }
        self._cache: dict[tuple[str, bool], dict[int, tuple[InterruptState, InterruptState]]] = {}

    def _apply(self, st: InterruptState, cp: InterruptControlPoint) -> InterruptState:
        ids = self.model.isr_table
        return InterruptState(tuple((k, cp.effect if cp.affects(ids[k]) else v) for k, v in st.states))

    def _spread(self, st: InterruptState, points: Iterable[InterruptControlPoint]) -> InterruptState:
        ids = self.model.isr_table
        d = dict(st.states)
        for cp in points:
            for k in d:
                if cp.affects(ids[k]):
                    d[k] = d[k].join(cp.effect)
        return InterruptState(tuple((k, d[k]) for k, _ in st.states))

    def entry_state(self, task: str) -> InterruptState:
        if task == "main":
            return self.initial
        # an ISR may start after any control point has run
        all_points = [cp for pts in self.task_points.values() for cp in pts]
        return self._spread(self.initial, all_points)

    def node_states(self, task: str, interference: bool = False) -> dict[int, tuple[InterruptState, InterruptState]]:
        key = (task, interference)
        if key in self._cache:
            return self._cache[key]
        g = self.graphs[task]
        foreign = [cp for t, pts in self.task_points.items() if t != task for cp in pts] if interference else []

        def settle(st: InterruptState) -> InterruptState:
            return self._spread(st, foreign) if foreign else st

        ins: dict[int, InterruptState] = {g.entry: settle(self.entry_state(task))}
        outs: dict[int, InterruptState] = {}
        work = [g.entry]
        while work:
            n = work.pop(0)
            node = g.nodes[n]
            st = ins[n]
            out = settle(self._apply(st, _ctl_point(node.ctl))) if node.ctl is not None else st
            if outs.get(n) == out:
                continue
            outs[n] = out
            for s in node.succs:
                new = out if s not in ins else ins[s].join(out)
                if ins.get(s) != new:
                    ins[s] = new
                    work.append(s)
                elif s not in outs:
                    work.append(s)
        res = {n: (ins[n], outs[n]) for n in outs}
        self._cache[key] = res
        return res

    def state_at(self, task: str, line: int, interference: bool = False) -> InterruptState | None:
        """Join of the states before and after every node of ``task`` on ``line``."""
        g = self.graphs[task]
        acc: InterruptState | None = None
        for n, (i, o) in self.node_states(task, interference).items():
            if g.nodes[n].line != line or g.nodes[n].kind == "nop":
                continue
            for st in (i, o):
                acc = st if acc is None else acc.join(st)
        return acc

    def state_before(self, task: str, node: int, interference: bool = False) -> InterruptState | None:
        s = self.node_states(task, interference).get(node)
        return None if s is None else s[0]

    def lines(self, task: str) -> list[int]:
        g = self.graphs[task]
        done = self.node_states(task)
        return sorted({g.nodes[n].line for n in done if g.nodes[n].kind != "nop"})

    def to_json(self, interference: bool = False) -> dict:
        per_task = {}
        for t in self.model.tasks:
            per_task[t] = {str(line): self.state_at(t, line, interference).as_dict() for line in self.lines(t)}  # type: ignore[union-attr]
        return {"control_points": [c.to_json() for c in self.points], "states": per_task}


def analyze_flow(model: ProgramModel, config: AnalysisConfig | None = None, matrix: AccessMatrix | None = None) -> FlowAnalysis:
    if matrix is None:
        matrix, _, _ = analyze_accesses(model)
    return FlowAnalysis(model, matrix, config)


def interrupt_state_at(
    model: ProgramModel,
    points: list[InterruptControlPoint] | None,
    task: str,
    line: int,
    config: AnalysisConfig | None = None,
    interference: bool = False,
) -> InterruptState:
    """State of every ISR when ``task`` is at ``line``.

    ``points`` is accepted for symmetry with :func:`find_control_points`; the
    control points are recomputed from the model.
    """
    fa = analyze_flow(model, config)
    st = fa.state_at(task, line, interference)
    if st is None:
        raise ValueError(f"line {line} is not part of task {task}")
    return st


def dump_flow(fa: FlowAnalysis, externals: list[ExternalCall]) -> str:
    data = fa.to_json()
    data["external_calls"] = [{"fn": e.caller, "name": e.name, "line": e.line} for e in externals]
    return json.dumps(data, indent=2, sort_keys=True)


__all__ = [
    "ALL",
    "FlowAnalysis",
    "InterruptControlPoint",
    "InterruptState",
    "IrqStatus",
    "analyze_flow",
    "dump_flow",
    "external_calls",
    "find_control_points",
    "interrupt_state_at",
]
