"""Candidate atomicity-violation triples.

For each task, a "reaching last accesses" dataflow over its task graph gives
the consecutive same-task pairs (a1, a3) on one variable: a3 is reached from
a1 along some path on which no other access of the task must touch the same
location. Each pair is combined with every access a2 to an aliasing location
from a task of strictly higher priority, and the op triple must be one of
the four patterns.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

from .access import AccessEvent, AccessMatrix, CallGraph
from .config import AnalysisConfig
from .flow import FlowAnalysis
from .model.program import IndexClass, ProgramModel, VarPath
from .taskgraph import TaskGraph, build_task_graph, dominators, dominates, mandatory_blocks

PATTERNS = ("RWR", "WWR", "RWW", "WRW")


@dataclass(frozen=True)
class ViolationPattern:
    tag: str

    @property
    def ops(self) -> tuple[str, str, str]:
        return (self.tag[0], self.tag[1], self.tag[2])

    def __str__(self) -> str:
        return self.tag


def is_violation_ops(ops: str) -> bool:
    """At least one read and no read immediately followed by a read."""
    return len(ops) == 3 and "R" in ops and "RR" not in ops


def enumerate_patterns() -> list[ViolationPattern]:
    found = ["".join(t) for t in itertools.product("RW", repeat=3) if is_violation_ops("".join(t))]
    order = {t: i for i, t in enumerate(PATTERNS)}
    return [ViolationPattern(t) for t in sorted(found, key=order.__getitem__)]


@dataclass(frozen=True)
class CandidateViolation:
    var: VarPath
    pattern: str
    a1: AccessEvent
    a2: AccessEvent
    a3: AccessEvent
    task_low: str
    task_high: str
    prio_low: int
    prio_high: int
    a1_conditional: bool = field(default=False, compare=False)
    a3_conditional: bool = field(default=False, compare=False)
    a1_dominates_a3: bool = field(default=False, compare=False)
    loop_carried: bool = field(default=False, compare=False)
    a2_masked: bool = field(default=False, compare=False)

    @property
    def key(self) -> tuple:
        return (self.var.key, self.pattern, self.a1.ident, self.a2.ident, self.a3.ident)

    def sort_key(self) -> tuple:
        return (self.var.key, PATTERNS.index(self.pattern), self.a1, self.a3, self.a2)

    def to_json(self) -> dict:
        def ev(e: AccessEvent) -> dict:
            return {"function": e.function, "line": e.line, "op": e.op}

        return {
            "var": self.var.key,
            "pattern": self.pattern,
            "a1": ev(self.a1),
            "a2": ev(self.a2),
            "a3": ev(self.a3),
            "tasks": [self.task_low, self.task_high],
            "flags": {
                "a1_conditional": self.a1_conditional,
                "a3_conditional": self.a3_conditional,
                "a1_dominates_a3": self.a1_dominates_a3,
                "loop_carried": self.loop_carried,
                "a2_masked": self.a2_masked,
            },
        }


def must_alias(a: VarPath, b: VarPath) -> bool:
    if a.base != b.base or a.field != b.field:
        return False
    if a.index is None or b.index is None:
        return a.index is None and b.index is None
    return isinstance(a.index, IndexClass) and isinstance(b.index, IndexClass) and a.index.kind == "constant" == b.index.kind and a.index.lo == b.index.lo


def may_alias(*paths: VarPath) -> bool:
    first = paths[0]
    if any(p.base != first.base or p.field != first.field for p in paths):
        return False
    idx = [p.index for p in paths if isinstance(p.index, IndexClass)]
    if not idx:
        return True
    return max(i.lo for i in idx) <= min(i.hi for i in idx)


def common_path(*paths: VarPath) -> VarPath:
    """The location all the given paths may denote together."""
    first = paths[0]
    idx = [p.index for p in paths if isinstance(p.index, IndexClass)]
    if not idx:
        return first
    return VarPath(first.base, IndexClass.interval(max(i.lo for i in idx), min(i.hi for i in idx)), first.field)


def consecutive_pairs(g: TaskGraph) -> set[tuple[AccessEvent, AccessEvent]]:
    """Pairs (a1, a3) of accesses with no must-aliasing access in between on some path."""
    ins: dict[int, frozenset[AccessEvent]] = {g.entry: frozenset()}
    pairs: set[tuple[AccessEvent, AccessEvent]] = set()
    work = [g.entry]
    done: dict[int, frozenset[AccessEvent]] = {}
    while work:
        n = work.pop(0)
        node = g.nodes[n]
        st = ins[n]
        if node.kind == "acc":
            for e in node.events:
                for r in st:
                    if may_alias(r.var, e.var):
                        pairs.add((r, e))
            if len(node.events) == 1:
                e = node.events[0]
                out = frozenset(r for r in st if not must_alias(r.var, e.var)) | {e}
            else:
                out = st | frozenset(node.events)
        else:
            out = st
        if done.get(n) == out:
            continue
        done[n] = out
        for s in node.succs:
            new = out if s not in ins else ins[s] | out
            if ins.get(s) != new or s not in done:
                ins[s] = new
                work.append(s)
    return pairs


class _Dominance:
    def __init__(self, model: ProgramModel):
        self.model = model
        self.idom = {f.name: dominators(f.cfg) for f in model.functions}
        self.mandatory = {f.name: mandatory_blocks(f.cfg) for f in model.functions}
        self.block = {f.name: f.cfg.block_of_unit() for f in model.functions}

    def conditional(self, e: AccessEvent) -> bool:
        if e.optional:
            return True
        b = self.block[e.function].get(e.ordinal)
        return b not in self.mandatory[e.function]

    def dominates(self, a: AccessEvent, b: AccessEvent) -> bool:
        if a.function != b.function:
            return False
        ba, bb = self.block[a.function].get(a.ordinal), self.block[b.function].get(b.ordinal)
        if ba is None or bb is None:
            return False
        if ba == bb:
            return a < b
        return dominates(self.idom[a.function], ba, bb)


def highlight(
    model: ProgramModel,
    accesses: AccessMatrix,
    callgraph: CallGraph | None = None,
    flow: FlowAnalysis | None = None,
    config: AnalysisConfig | None = None,
    graphs: dict[str, TaskGraph] | None = None,
) -> list[CandidateViolation]:
    """Enumerate candidate triples, sorted by variable, pattern and location.

    ``callgraph`` is implied by the task graphs (calls are inlined) and is
    accepted for interface symmetry. When ``flow`` is given, candidates whose
    a2 task is Disabled at both a1 and a3 are flagged ``a2_masked`` and, if
    the config asks for it, dropped.
    """
    config = config or AnalysisConfig()
    if graphs is None:
        graphs = flow.graphs if flow is not None else {t: build_task_graph(model, accesses, t) for t in model.tasks}
    dom = _Dominance(model)
    task_events = {t: sorted(g.events()) for t, g in graphs.items()}
    out: dict[tuple, CandidateViolation] = {}
    for low in model.tasks:
        g = graphs[low]
        highs = [t for t in model.tasks if model.priority(t) > model.priority(low)]
        if not highs:
            continue
        line_state = _line_states(flow, low) if flow is not None else {}
        for a1, a3 in sorted(consecutive_pairs(g)):
            for high in highs:
                for a2 in task_events[high]:
                    if not may_alias(a1.var, a2.var, a3.var):
                        continue
                    tag = a1.op + a2.op + a3.op
                    if tag not in PATTERNS:
                        continue
                    masked = False
                    if line_state:
                        s1, s3 = line_state.get(a1.line), line_state.get(a3.line)
                        masked = s1 is not None and s3 is not None and s1.is_disabled(high) and s3.is_disabled(high)
                    if masked and config.prune_masked_candidates:
                        continue
                    c = CandidateViolation(
                        common_path(a1.var, a2.var, a3.var),
                        tag,
                        a1,
                        a2,
                        a3,
                        low,
                        high,
                        model.priority(low),
                        model.priority(high),
                        a1_conditional=dom.conditional(a1),
                        a3_conditional=dom.conditional(a3),
                        a1_dominates_a3=dom.dominates(a1, a3),
                        loop_carried=not a1 < a3,
                        a2_masked=masked,
                    )
                    out.setdefault(c.key, c)
    return sorted(out.values(), key=CandidateViolation.sort_key)


def _line_states(flow: FlowAnalysis, task: str) -> dict:
    # interference mode: an ISR enabled by a preempting task is not masked
    return {line: flow.state_at(task, line, interference=True) for line in flow.lines(task)}


def shared_globals(accesses: AccessMatrix, graphs: dict[str, TaskGraph]) -> list[str]:
    """Variable keys touched by at least two tasks, in declaration-independent sorted order."""
    users: dict[str, set[str]] = {}
    for t, g in graphs.items():
        for e in g.events():
            users.setdefault(e.var.key, set()).add(t)
    return sorted(k for k, ts in users.items() if len(ts) >= 2)


def dump_candidates(cands: list[CandidateViolation]) -> str:
    return json.dumps([c.to_json() for c in cands], indent=2, sort_keys=True)
