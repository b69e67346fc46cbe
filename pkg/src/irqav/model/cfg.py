"""Statement-level control flow graphs.

Blocks hold evaluation units in order; a block that ends in a branch keeps
the condition unit as ``cond`` and has labelled successors ``T``/``F``.
There is no synthetic exit block: blocks without successors leave the
function.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import syntax as S


@dataclass
class BasicBlock:
    id: int
    kind: str
    units: list[S.Unit] = field(default_factory=list)
    cond: S.Unit | None = None
    succs: list[tuple[int, str]] = field(default_factory=list)
    preds: list[int] = field(default_factory=list)
    returns: bool = False

    @property
    def all_units(self) -> list[S.Unit]:
        return self.units + ([self.cond] if self.cond is not None else [])


@dataclass
class CFG:
    blocks: list[BasicBlock]
    entry: int = 0
    back_edges: frozenset[tuple[int, int]] = frozenset()

    @property
    def edges(self) -> list[tuple[int, int, str]]:
        return [(b.id, t, lab) for b in self.blocks for t, lab in b.succs]

    def successors(self, bid: int) -> list[int]:
        return [t for t, _ in self.blocks[bid].succs]

    def exits(self) -> list[int]:
        return [b.id for b in self.blocks if not b.succs]

    def block_of_unit(self) -> dict[int, int]:
        return {u.ordinal: b.id for b in self.blocks for u in b.all_units}

    def reachable(self) -> set[int]:
        seen = {self.entry}
        stack = [self.entry]
        while stack:
            b = stack.pop()
            for t in self.successors(b):
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return seen


class _Builder:
    def __init__(self) -> None:
        self.blocks: list[BasicBlock] = []
        self.current: int | None = self.new("entry")
        self.loops: list[tuple[int, int]] = []  # (continue target, break target)

    def new(self, kind: str) -> int:
        b = BasicBlock(len(self.blocks), kind)
        self.blocks.append(b)
        return b.id

    def edge(self, a: int, b: int, label: str = "") -> None:
        self.blocks[a].succs.append((b, label))
        self.blocks[b].preds.append(a)

    def cur(self) -> int:
        if self.current is None:
            self.current = self.new("dead")
        return self.current

    def visit(self, s: S.Stmt) -> None:
        if isinstance(s, (S.ExprStmt, S.DeclStmt)):
            self.blocks[self.cur()].units.append(s.unit)
        elif isinstance(s, S.Return):
            b = self.cur()
            self.blocks[b].units.append(s.unit)
            self.blocks[b].returns = True
            self.current = None
        elif isinstance(s, S.Block):
            for c in s.stmts:
                self.visit(c)
        elif isinstance(s, S.If):
            head = self.cur()
            self.blocks[head].cond = s.cond
            then_b = self.new("then")
            self.edge(head, then_b, "T")
            self.current = then_b
            self.visit(s.then)
            then_end = self.current
            else_end = None
            if s.other is not None:
                else_b = self.new("else")
                self.edge(head, else_b, "F")
                self.current = else_b
                self.visit(s.other)
                else_end = self.current
            join = self.new("join")
            if s.other is None:
                self.edge(head, join, "F")
            for end in (then_end, else_end):
                if end is not None:
                    self.edge(end, join)
            self.current = join
        elif isinstance(s, S.While):
            header = self.new("header")
            self.edge(self.cur(), header)
            self.blocks[header].cond = s.cond
            body = self.new("body")
            exit_b = self.new("exit")
            self.edge(header, body, "T")
            self.edge(header, exit_b, "F")
            self.loops.append((header, exit_b))
            self.current = body
            self.visit(s.body)
            if self.current is not None:
                self.edge(self.current, header)
            self.loops.pop()
            self.current = exit_b
        elif isinstance(s, S.For):
            if s.init is not None:
                self.blocks[self.cur()].units.append(s.init)
            header = self.new("header")
            self.edge(self.cur(), header)
            body = self.new("body")
            latch = self.new("latch")
            exit_b = self.new("exit")
            if s.cond is not None:
                self.blocks[header].cond = s.cond
                self.edge(header, body, "T")
                self.edge(header, exit_b, "F")
            else:
                # no condition: the exit edge stands for a bounded unrolling
                self.edge(header, body, "T")
                self.edge(header, exit_b, "F")
            if s.step is not None:
                self.blocks[latch].units.append(s.step)
            self.loops.append((latch, exit_b))
            self.current = body
            self.visit(s.body)
            if self.current is not None:
                self.edge(self.current, latch)
            self.loops.pop()
            self.edge(latch, header)
            self.current = exit_b
        elif isinstance(s, S.Break):
            self.edge(self.cur(), self.loops[-1][1])
            self.current = None
        elif isinstance(s, S.Continue):
            self.edge(self.cur(), self.loops[-1][0])
            self.current = None
        elif isinstance(s, S.Empty):
            pass
        else:  # pragma: no cover
            raise TypeError(type(s))


def _back_edges(blocks: list[BasicBlock], entry: int) -> frozenset[tuple[int, int]]:
    # an edge is a back-edge when it targets a block on the current DFS stack
    back: set[tuple[int, int]] = set()
    state: dict[int, int] = {}
    stack = [(entry, iter(blocks[entry].succs))]
    state[entry] = 1
    while stack:
        node, it = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            state[node] = 2
            stack.pop()
            continue
        t = nxt[0]
        if state.get(t) == 1:
            back.add((node, t))
        elif t not in state:
            state[t] = 1
            stack.append((t, iter(blocks[t].succs)))
    return frozenset(back)


def build_cfg(body: S.Block) -> CFG:
    """Split a function body into basic blocks at branch and join points."""
    b = _Builder()
    b.visit(body)
    return CFG(b.blocks, 0, _back_edges(b.blocks, 0))


def loop_body_ordinals(s: S.Stmt | None, acc: dict[int, tuple[int, ...]] | None = None, stack: tuple[int, ...] = ()) -> dict[int, tuple[int, ...]]:
    """Map each unit ordinal to the ordinals of the loop conditions enclosing it."""
    if acc is None:
        acc = {}
    if s is None:
        return acc
    if isinstance(s, (S.ExprStmt, S.DeclStmt, S.Return)):
        acc[s.unit.ordinal] = stack
    elif isinstance(s, S.Block):
        for c in s.stmts:
            loop_body_ordinals(c, acc, stack)
    elif isinstance(s, S.If):
        acc[s.cond.ordinal] = stack
        loop_body_ordinals(s.then, acc, stack)
        loop_body_ordinals(s.other, acc, stack)
    elif isinstance(s, S.While):
        acc[s.cond.ordinal] = stack
        loop_body_ordinals(s.body, acc, stack + (s.cond.ordinal,))
    elif isinstance(s, S.For):
        key = s.cond.ordinal if s.cond is not None else -s.line
        if s.init is not None:
            acc[s.init.ordinal] = stack
        inner = stack + (key,)
        for u in (s.cond, s.step):
            if u is not None:
                acc[u.ordinal] = inner
        loop_body_ordinals(s.body, acc, inner)
    return acc
