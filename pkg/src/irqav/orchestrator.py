"""Tool activation, code summary, task partitioning and source annotation."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .access import AccessMatrix, CallGraph, EntrySet, analyze_accesses
from .config import AnalysisConfig
from .extractor import CompressedSource, extract, reachable_functions, split_lines
from .flow import FlowAnalysis, IrqStatus, find_control_points
from .highlighter import PATTERNS, CandidateViolation, highlight, shared_globals
from .model.program import ProgramModel
from .taskgraph import TaskGraph, build_task_graph

MARK = " // [AV]"


@dataclass
class Analyses:
    """Immutable-by-convention bundle shared by every agent pair of one program."""

    model: ProgramModel
    config: AnalysisConfig
    matrix: AccessMatrix
    entry: EntrySet
    callgraph: CallGraph
    graphs: dict[str, TaskGraph]
    candidates: list[CandidateViolation]
    flow: FlowAnalysis | None
    compressed: CompressedSource | None
    tools: tuple[str, ...]
    shared: tuple[str, ...]

    def task_of_function(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for t, g in self.graphs.items():
            for f in sorted(g.functions()):
                out.setdefault(f, []).append(t)
        return out


@dataclass(frozen=True)
class CodeSummary:
    accesses: dict[str, dict[str, dict[str, int]]]  # var -> task -> {"R": n, "W": n}
    control_points: tuple[dict, ...]
    candidates_per_pattern: dict[str, int]
    candidates_per_var: dict[str, int]
    var_order: tuple[str, ...]  # highlighted variables in declaration order
    call_edges: tuple[tuple[str, str, int], ...]
    external_calls: tuple[tuple[str, str, int], ...]
    tasks: dict[str, int]
    compressed: bool
    line_map: dict[int, int] | None = None
    tools: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "accesses": self.accesses,
            "control_points": list(self.control_points),
            "candidates_per_pattern": self.candidates_per_pattern,
            "candidates_per_var": self.candidates_per_var,
            "call_edges": [list(e) for e in self.call_edges],
            "external_calls": [list(e) for e in self.external_calls],
            "tasks": self.tasks,
            "compressed": self.compressed,
            "tools": list(self.tools),
        }

    def render(self, variables: tuple[str, ...] | None = None) -> str:
        """Deterministic JSON text of the summary, optionally narrowed to some variables."""
        data = self.to_json()
        if variables is not None:
            data["accesses"] = {v: c for v, c in data["accesses"].items() if v in variables}
            data["candidates_per_var"] = {v: c for v, c in data["candidates_per_var"].items() if v in variables}
        return json.dumps(data, indent=1, sort_keys=True)


@dataclass(frozen=True)
class DetectionTask:
    id: str
    strategy: str  # PatternBased | VariableBased
    variables: tuple[str, ...]
    patterns: tuple[str, ...]
    coverage: frozenset[tuple[str, str]]
    candidates: tuple[CandidateViolation, ...] = ()
    annotated_source: str = ""
    summary: CodeSummary | None = field(default=None, compare=False)


def plan(model: ProgramModel, config: AnalysisConfig | None = None) -> tuple[Analyses, CodeSummary]:
    """Run the static tools the program needs and summarize their results."""
    config = config or AnalysisConfig()
    matrix, entry, cg = analyze_accesses(model)
    tools = ["access_analysis"]
    graphs = {t: build_task_graph(model, matrix, t) for t in model.tasks}
    points = find_control_points(model)
    flow = None
    if cg.has_interfunction_edges or points:
        flow = FlowAnalysis(model, matrix, config, graphs)
        tools.append("flow_analysis")
    shared = shared_globals(matrix, graphs)
    candidates: list[CandidateViolation] = []
    if shared:
        candidates = highlight(model, matrix, cg, flow, config, graphs)
        tools.append("highlighter")
    compressed = None
    if len(model.source_text) > config.context_budget:
        compressed = extract(model.source_text, model, reachable_functions(entry, cg))
        tools.append("code_extractor")
    analyses = Analyses(model, config, matrix, entry, cg, graphs, candidates, flow, compressed, tuple(tools), tuple(shared))
    return analyses, summarize(analyses)


def summarize(a: Analyses) -> CodeSummary:
    acc: dict[str, dict[str, dict[str, int]]] = {}
    for t, g in a.graphs.items():
        for e in g.events():
            if e.var.key not in a.shared:
                continue
            slot = acc.setdefault(e.var.key, {}).setdefault(t, {"R": 0, "W": 0})
            slot[e.op] += 1
    per_pattern = {p: sum(c.pattern == p for c in a.candidates) for p in PATTERNS}
    per_var: dict[str, int] = {}
    for c in a.candidates:
        per_var[c.var.key] = per_var.get(c.var.key, 0) + 1
    decl = {g.name: i for i, g in enumerate(a.model.globals)}
    order = tuple(sorted(per_var, key=lambda k: (decl.get(k.split(".")[0], len(decl)), k)))
    return CodeSummary(
        accesses=acc,
        control_points=tuple(p.to_json() for p in find_control_points(a.model)),
        candidates_per_pattern=per_pattern,
        candidates_per_var=per_var,
        var_order=order,
        call_edges=tuple((e.caller, e.callee, e.line) for e in a.callgraph.edges),
        external_calls=tuple((e.caller, e.name, e.line) for e in a.callgraph.externals),
        tasks=dict(a.model.isr_table),
        compressed=a.compressed is not None,
        line_map=dict(a.compressed.line_map) if a.compressed is not None else None,
        tools=a.tools,
    )


def partition_tasks(
    summary: CodeSummary,
    candidates: list[CandidateViolation],
    config: AnalysisConfig | None = None,
) -> list[DetectionTask]:
    """Split the (variable, pattern) space into disjoint detection tasks."""
    config = config or AnalysisConfig()
    if not candidates:
        return []
    cover: dict[str, set[str]] = {}
    for c in candidates:
        cover.setdefault(c.var.key, set()).add(c.pattern)
    variables = [v for v in summary.var_order if v in cover] + sorted(v for v in cover if v not in summary.var_order)
    counts = [n for p, n in summary.candidates_per_pattern.items() if n > 0]
    even = bool(counts) and max(counts) <= config.even_ratio * min(counts)
    tasks: list[DetectionTask] = []
    if len(variables) < 3 and even:
        for p in PATTERNS:
            vs = tuple(v for v in variables if p in cover[v])
            if not vs:
                continue
            cov = frozenset((v, p) for v in vs)
            tasks.append(_task(f"pattern_{p}", "PatternBased", vs, (p,), cov, candidates, summary))
        return tasks
    per_var = summary.candidates_per_var
    groups: list[list[str]] = []
    pending: list[str] = []
    for v in variables:
        if per_var.get(v, 0) >= config.high_frequency_threshold:
            groups.append([v])
        else:
            pending.append(v)
            if len(pending) == config.max_vars_per_group:
                groups.append(pending)
                pending = []
    if pending:
        groups.append(pending)
    # keep groups in order of their first variable
    pos = {v: i for i, v in enumerate(variables)}
    groups.sort(key=lambda g: pos[g[0]])
    for i, g in enumerate(groups, 1):
        pats = tuple(p for p in PATTERNS if any(p in cover[v] for v in g))
        cov = frozenset((v, p) for v in g for p in cover[v])
        tasks.append(_task(f"vars_{i}", "VariableBased", tuple(g), pats, cov, candidates, summary))
    return tasks


def _task(tid, strategy, vs, pats, cov, candidates, summary) -> DetectionTask:
    mine = tuple(c for c in candidates if (c.var.key, c.pattern) in cov)
    return DetectionTask(tid, strategy, vs, pats, cov, mine, "", summary)


# -- annotation -------------------------------------------------------------------

_SHORT = {IrqStatus.ENABLED: "E", IrqStatus.DISABLED: "D", IrqStatus.UNKNOWN: "?"}


def line_facts(a: Analyses, task: DetectionTask) -> dict[int, str]:
    """Static facts per original line for the task's variables."""
    owners = a.task_of_function()
    prio = a.model.isr_table
    roles: dict[int, list[str]] = {}
    for c in task.candidates:
        for role, e in (("a1", c.a1), ("a2", c.a2), ("a3", c.a3)):
            roles.setdefault(e.line, []).append(role)
    out: dict[int, list[str]] = {}
    seen: set[tuple] = set()
    for e in a.matrix.events:
        if e.var.key not in task.variables:
            continue
        tasks = owners.get(e.function, [])
        k = (e.line, e.op, str(e.var), e.function)
        if k in seen:
            continue
        seen.add(k)
        who = ",".join(f"{t}/p{prio[t]}" for t in tasks) or "unreachable"
        cond = " cond" if e.optional else ""
        out.setdefault(e.line, []).append(f"{e.op}({e.var}) in {e.function} [{who}]{cond}")
    result: dict[int, str] = {}
    for line, facts in out.items():
        parts = list(facts)
        r = roles.get(line)
        if r:
            parts.append("cand " + " ".join(f"{x}x{r.count(x)}" for x in ("a1", "a2", "a3") if x in r))
        if a.flow is not None:
            fn = next(e.function for e in a.matrix.events if e.line == line)
            for t in owners.get(fn, []):
                st = a.flow.state_at(t, line)
                if st is not None and st.states:
                    parts.append(f"irq@{t} " + " ".join(f"{k}={_SHORT[v]}" for k, v in st.states))
        result[line] = "; ".join(parts)
    return result


def _prefix(n: int | None) -> str:
    return f"{n:4d} | " if n is not None else "   - | "


_PREFIX = re.compile(r"^ *(\d+|-) \| ")


def annotate_source(text: str, task: DetectionTask, analyses: Analyses, compressed: CompressedSource | None = None) -> str:
    """Prefix every line with its original number and tag lines touching the task's variables."""
    facts = line_facts(analyses, task)
    out = []
    for i, raw in enumerate(split_lines(text), 1):
        body = raw.rstrip("\r\n")
        eol = raw[len(body) :]
        orig = compressed.line_map.get(i) if compressed is not None else i
        note = facts.get(orig) if orig is not None else None
        if note is not None or MARK in body:
            body = f"{body}{MARK} {note or ''}".rstrip()
        out.append(_prefix(orig) + body + eol)
    return "".join(out)


def strip_annotations(text: str) -> str:
    """Undo :func:`annotate_source` exactly."""
    out = []
    for raw in split_lines(text):
        body = raw.rstrip("\r\n")
        eol = raw[len(body) :]
        m = _PREFIX.match(body)
        if m:
            body = body[m.end() :]
        if MARK in body:
            body = body.rpartition(MARK)[0]
        out.append(body + eol)
    return "".join(out)


def prepare_tasks(analyses: Analyses, summary: CodeSummary) -> list[DetectionTask]:
    """Partition and attach annotated source (compressed when extraction ran)."""
    tasks = partition_tasks(summary, analyses.candidates, analyses.config)
    text = analyses.compressed.text if analyses.compressed is not None else analyses.model.source_text
    out = []
    for t in tasks:
        ann = annotate_source(text, t, analyses, analyses.compressed)
        out.append(DetectionTask(t.id, t.strategy, t.variables, t.patterns, t.coverage, t.candidates, ann, summary))
    return out


def dump_plan(summary: CodeSummary, tasks: list[DetectionTask]) -> str:
    data = {
        "summary": summary.to_json(),
        "tasks": [
            {
                "id": t.id,
                "strategy": t.strategy,
                "variables": list(t.variables),
                "patterns": list(t.patterns),
                "candidates": len(t.candidates),
            }
            for t in tasks
        ],
    }
    return json.dumps(data, indent=2, sort_keys=True)
