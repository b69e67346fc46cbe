"""Prompt assembly for the Expert and Judge roles.

Prompts are plain text built from fixed section headings so that replays and
golden-file tests see byte-identical input for identical analyses.
"""

from __future__ import annotations

import json
from typing import Iterable, Sequence

from ..errors import PromptOverBudget
from ..flow import FlowAnalysis
from ..orchestrator import DetectionTask
from .knowledge import KnowledgeModule
from .reports import DefectReport

EXPERT_SYSTEM = (
    "You analyze interrupt-driven embedded C programs for atomicity violations. "
    "Answer only with the JSON object described in the Output Format section."
)
JUDGE_SYSTEM = (
    "You validate reported atomicity violations in interrupt-driven embedded C programs "
    "against the interrupt enable state and program reachability. "
    "Answer only with the JSON object described in the Output Format section."
)

EXPERT_RULES = """\
1. Decompose compound operations. `x += e`, `x++` and `x = x op e` are a read of x followed by a write of x; count both accesses.
2. For every task that touches the variable, list its reads and writes in execution order, following calls into the functions it invokes.
3. For loops, consider both the first iteration and the wrap-around from the end of one iteration to the start of the next; an access late in the body pairs with one early in the next iteration.
4. Pair each two consecutive accesses (a1, a3) of one task with an access a2 of a strictly higher-priority ISR. Test all priority level combinations: main against every ISR, and every lower ISR against every higher one.
5. Keep only triples whose operations form R-W-R, W-W-R, R-W-W or W-R-W.
6. Use the interrupt state noted on annotated lines: an ISR that is disabled for the whole a1..a3 window cannot supply a2.
7. Report original line numbers as printed in the left margin."""

JUDGE_RULES = """\
1. For each violation decide whether some execution reaches a1, lets the a2 ISR preempt, and then reaches a3.
2. Reject when the a2 ISR is disabled at every point between a1 and a3, or is never enabled anywhere in the program.
3. Reject when a1 and a3 cannot both execute in one activation of their task (for example they sit in mutually exclusive branches).
4. Reject when a2 cannot run between a1 and a3 for another reason, and say which.
5. Otherwise confirm. Give a one-sentence reason for every verdict."""

EXPERT_SCHEMA = """\
{"status": "violations" | "no_defect" | "abstain",
 "violations": [{"var": str, "pattern": "RWR" | "WWR" | "RWW" | "WRW",
                 "a1": {"function": str, "line": int, "op": "R" | "W"},
                 "a2": {"function": str, "line": int, "op": "R" | "W"},
                 "a3": {"function": str, "line": int, "op": "R" | "W"},
                 "rationale": str}]}"""

JUDGE_SCHEMA = """\
{"verdicts": [{"id": int, "verdict": "confirmed" | "rejected", "reason": str}],
 "feedback": str}"""

JUDGE_EXAMPLES = """\
- rejected: "line 31 never executes while ISR_4 is enabled; ISR_4 is disabled before main's loop and never re-enabled"
- rejected: "unreachable-pair: lines 12 and 15 are in the two arms of one if/else"
- rejected: "no-interleaving: ISR_2 is disabled on every path from line 8 to line 10"
- confirmed: "ISR_1 is enabled at line 22 and its write can land before the store on line 23\""""


def _format_history(history: Sequence) -> str:
    parts = []
    for e in history:
        parts.append(f"### Round {e.round} | {e.role} | {e.purpose}\n{e.content}")
    return "\n\n".join(parts)


def _check(text: str, budget: int | None) -> str:
    if budget is not None and len(text) > budget:
        raise PromptOverBudget(len(text), budget)
    return text


def task_statement(task: DetectionTask) -> str:
    vs = ", ".join(task.variables)
    ps = ", ".join(task.patterns)
    return (
        f"Task {task.id} ({task.strategy}). Find every atomicity violation on the shared "
        f"variable(s) {vs} matching pattern(s) {ps}. A violation is a triple (a1, a2, a3): "
        "a1 and a3 are consecutive accesses of one task, a2 is an access by a strictly "
        "higher-priority ISR that can run between them."
    )


def build_expert_prompt(
    task: DetectionTask,
    km: KnowledgeModule | Iterable[KnowledgeModule],
    history: Sequence = (),
    budget: int | None = None,
) -> str:
    """Assemble the Expert prompt; raises PromptOverBudget past ``budget`` characters."""
    mods = [km] if isinstance(km, KnowledgeModule) else list(km)
    for m in mods:
        if m.pattern not in task.patterns:
            raise ValueError(f"module {m.pattern} is not among the task's patterns {task.patterns}")
    defs = "\n".join(f"- {m.pattern}: {m.definition}" for m in mods)
    examples = "\n\n".join(m.render_example() for m in mods)
    summary = task.summary.render(task.variables) if task.summary is not None else "{}"
    sections = [
        f"## Detection Task\n{task_statement(task)}\n\nPattern definitions:\n{defs}",
        f"## Detection Rules\n{EXPERT_RULES}",
        f"## Output Format\nReply with one JSON object:\n{EXPERT_SCHEMA}\n"
        'Use "no_defect" with an empty list when nothing is found, "abstain" when the code is beyond analysis.\n\n'
        f"{examples}",
        f"## Code Summary\n{summary}",
        f"## Annotated Source\nLines tagged `// [AV]` carry static facts: accesses with their task and priority, candidate roles, and per-ISR enable state (E enabled, D disabled, ? unknown).\n{task.annotated_source}",
    ]
    if history:
        sections.append(f"## History\n{_format_history(history)}")
    return _check("\n\n".join(sections) + "\n", budget)


def interrupt_facts(report: DefectReport, flow: FlowAnalysis | None, task_of: dict[str, list[str]]) -> str:
    """Enable state of each ISR around every reported access."""
    if flow is None:
        return "No interrupt control points; every ISR is always enabled."
    lines = [f"Control points: {json.dumps([p.to_json() for p in flow.points], sort_keys=True)}"]
    seen: set[tuple] = set()
    for v in report.violations:
        for ref in (v.a1, v.a2, v.a3):
            for t in task_of.get(ref.function, []):
                k = (t, ref.line)
                if k in seen:
                    continue
                seen.add(k)
                st = flow.state_at(t, ref.line, interference=True)
                if st is None:
                    lines.append(f"- {t} line {ref.line}: never executes")
                else:
                    desc = ", ".join(f"{isr} {s.value}" for isr, s in st.states) or "no ISRs"
                    lines.append(f"- {t} line {ref.line}: {desc}")
    return "\n".join(lines)


def build_judge_prompt(
    report: DefectReport,
    task: DetectionTask,
    flow: FlowAnalysis | None,
    task_of: dict[str, list[str]],
    history: Sequence = (),
    budget: int | None = None,
) -> str:
    numbered = "\n".join(f"{i}. {json.dumps(v.to_json(), sort_keys=True)}" for i, v in enumerate(report.violations, 1))
    sections = [
        f"## Validation Task\nDecide for each reported violation of task {task.id} whether it can occur in a reachable program state.\n\n{numbered}",
        f"## Validation Rules\n{JUDGE_RULES}",
        f"## Interrupt States\n{interrupt_facts(report, flow, task_of)}",
        f"## Output Format\nReply with one JSON object, one verdict per numbered violation:\n{JUDGE_SCHEMA}\n\nReason examples:\n{JUDGE_EXAMPLES}",
        f"## Annotated Source\n{task.annotated_source}",
    ]
    if history:
        sections.append(f"## History\n{_format_history(history)}")
    return _check("\n\n".join(sections) + "\n", budget)


REFORMAT = (
    "Your previous reply could not be used: {error}. "
    "Reply again with only the JSON object required by the Output Format section."
)
