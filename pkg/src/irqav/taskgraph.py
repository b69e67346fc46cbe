"""Per-task expanded graphs and dominator utilities.

A task graph inlines every call reachable from a scheduling root, so a path
through it is one possible execution of that task instance. Nodes are access
steps, interrupt intrinsics, or no-op joins; the node order along a path is
the same micro-step order the simulator follows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .access import Acc, AccessEvent, AccessMatrix, Alt, CallItem, CtlItem
from .model import syntax as S
from .model.cfg import CFG
from .model.program import ProgramModel


@dataclass
class Node:
    id: int
    kind: str  # acc | ctl | unit | nop
    function: str
    line: int
    events: tuple[AccessEvent, ...] = ()
    ctl: CtlItem | None = None
    succs: list[int] = field(default_factory=list)


@dataclass
class TaskGraph:
    task: str
    nodes: list[Node]
    entry: int
    exit: int

    def preds(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {n.id: [] for n in self.nodes}
        for n in self.nodes:
            for s in n.succs:
                out[s].append(n.id)
        return out

    def access_nodes(self) -> list[Node]:
        return [n for n in self.nodes if n.kind == "acc"]

    def events(self) -> set[AccessEvent]:
        return {e for n in self.nodes for e in n.events}

    def functions(self) -> set[str]:
        return {n.function for n in self.nodes}


class _GraphBuilder:
    def __init__(self, model: ProgramModel, matrix: AccessMatrix, task: str):
        self.model = model
        self.matrix = matrix
        self.task = task
        self.nodes: list[Node] = []

    def new(self, kind: str, fn: str, line: int, **kw) -> int:
        n = Node(len(self.nodes), kind, fn, line, **kw)
        self.nodes.append(n)
        return n.id

    def link(self, a: int, b: int) -> None:
        if b not in self.nodes[a].succs:
            self.nodes[a].succs.append(b)

    def chain(self, items, cur: int, fn: str, line: int) -> int:
        for it in items:
            if isinstance(it, Acc):
                n = self.new("acc", fn, it.events[0].line, events=it.events)
                self.link(cur, n)
                cur = n
            elif isinstance(it, CtlItem):
                n = self.new("ctl", fn, it.line, ctl=it)
                self.link(cur, n)
                cur = n
            elif isinstance(it, CallItem):
                entry, exit_ = self.function(it.callee)
                self.link(cur, entry)
                cur = self.new("nop", fn, it.line)
                self.link(exit_, cur)
            elif isinstance(it, Alt):
                join = self.new("nop", fn, line)
                for br in it.branches:
                    end = self.chain(br, cur, fn, line)
                    self.link(end, join)
                cur = join
        return cur

    def unit(self, fn: str, u: S.Unit, cur: int) -> int:
        n = self.new("unit", fn, u.line)
        self.link(cur, n)
        return self.chain(self.matrix.unit_items.get((fn, u.ordinal), ()), n, fn, u.line)

    def function(self, name: str) -> tuple[int, int]:
        fd = self.model.function(name)
        cfg = fd.cfg
        entry = self.new("nop", name, fd.line)
        exit_ = self.new("nop", name, fd.end_line)
        starts: dict[int, int] = {}
        ends: dict[int, int] = {}
        for b in cfg.blocks:
            start = self.new("nop", name, b.units[0].line if b.units else (b.cond.line if b.cond else fd.line))
            cur = start
            for u in b.all_units:
                cur = self.unit(name, u, cur)
            starts[b.id], ends[b.id] = start, cur
        self.link(entry, starts[cfg.entry])
        for b in cfg.blocks:
            if b.returns or not b.succs:
                self.link(ends[b.id], exit_)
            else:
                for t, _ in b.succs:
                    self.link(ends[b.id], starts[t])
        return entry, exit_

    def build(self) -> TaskGraph:
        entry, exit_ = self.function(self.task)
        return TaskGraph(self.task, self.nodes, entry, exit_)


def build_task_graph(model: ProgramModel, matrix: AccessMatrix, task: str) -> TaskGraph:
    """Inline every call reachable from ``task`` into one graph."""
    return _GraphBuilder(model, matrix, task).build()


def reachable_nodes(g: TaskGraph) -> set[int]:
    seen = {g.entry}
    stack = [g.entry]
    while stack:
        n = stack.pop()
        for s in g.nodes[n].succs:
            if s not in seen:
                seen.add(s)
                stack.append(s)
    return seen


# -- dominators -----------------------------------------------------------------


def dominators(cfg: CFG) -> dict[int, int]:
    """Immediate dominators of the reachable blocks (entry maps to itself).

    Iterative two-finger intersection over reverse postorder.
    """
    order: list[int] = []
    seen: set[int] = set()
    stack = [(cfg.entry, iter(cfg.successors(cfg.entry)))]
    seen.add(cfg.entry)
    while stack:
        node, it = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            order.append(node)
            stack.pop()
        elif nxt not in seen:
            seen.add(nxt)
            stack.append((nxt, iter(cfg.successors(nxt))))
    rpo = order[::-1]
    index = {b: i for i, b in enumerate(rpo)}
    preds: dict[int, list[int]] = {b: [] for b in rpo}
    for b in rpo:
        for s in cfg.successors(b):
            preds[s].append(b)
    idom: dict[int, int] = {cfg.entry: cfg.entry}

    def intersect(a: int, b: int) -> int:
        while a != b:
            while index[a] > index[b]:
                a = idom[a]
            while index[b] > index[a]:
                b = idom[b]
        return a

    changed = True
    while changed:
        changed = False
        for b in rpo[1:]:
            ps = [p for p in preds[b] if p in idom]
            new = ps[0]
            for p in ps[1:]:
                new = intersect(p, new)
            if idom.get(b) != new:
                idom[b] = new
                changed = True
    return idom


def dominates(idom: dict[int, int], a: int, b: int) -> bool:
    if a not in idom or b not in idom:
        return False
    while True:
        if a == b:
            return True
        if idom[b] == b:
            return False
        b = idom[b]


def mandatory_blocks(cfg: CFG) -> set[int]:
    """Blocks executed on every complete run of the function.

    A block is mandatory when no exit is reachable from the entry once the
    block is removed. Functions without a reachable exit (endless loops) use
    the loop latches as sinks.
    """
    reach = cfg.reachable()
    sinks = {b for b in cfg.exits() if b in reach}
    if not sinks:
        sinks = {a for a, _ in cfg.back_edges}
    out = set()
    for b in reach:
        if b == cfg.entry:
            out.add(b)
            continue
        seen = {cfg.entry}
        stack = [cfg.entry]
        hit = False
        while stack and not hit:
            n = stack.pop()
            if n in sinks:
                hit = True
                break
            for s in cfg.successors(n):
                if s != b and s not in seen:
                    seen.add(s)
                    stack.append(s)
        if not hit:
            out.add(b)
    return out
