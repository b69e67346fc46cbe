"""Expert and Judge calls plus the round loop that ties them together."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from ..errors import BackendUnavailable, MalformedReply
from ..orchestrator import Analyses, DetectionTask
from .backends import ChatBackend, Request
from .knowledge import modules_for
from .prompts import EXPERT_SYSTEM, JUDGE_SYSTEM, REFORMAT, build_expert_prompt, build_judge_prompt
from .reports import DefectReport, Verdict, parse_report, parse_verdicts, verdicts_json


@dataclass(frozen=True)
class ConversationEntry:
    role: str  # Expert | Judge
    round: int
    purpose: str
    content: str

    def to_json(self) -> dict:
        return {"role": self.role, "round": self.round, "purpose": self.purpose, "content": self.content}


def _ask(backend: ChatBackend, req: Request, parse):
    """Send a request, retrying once with a reformat instruction on a bad reply."""
    reply = backend.complete(req)
    try:
        return parse(reply)
    except MalformedReply as e:
        retry = Request(
            req.role,
            req.round,
            req.task_id,
            req.messages + [{"role": "assistant", "content": reply}, {"role": "user", "content": REFORMAT.format(error=e)}],
            1,
            req.task,
            req.analyses,
            req.history,
            req.report,
        )
        return parse(backend.complete(retry))


def expert_detect(
    task: DetectionTask,
    backend: ChatBackend,
    history: Sequence[ConversationEntry],
    analyses: Analyses,
    round_no: int = 1,
) -> DefectReport:
    """One Expert turn: prompt, reply, validated report."""
    prompt = build_expert_prompt(task, modules_for(task.patterns), history, analyses.config.prompt_budget)
    msgs = [{"role": "system", "content": EXPERT_SYSTEM}, {"role": "user", "content": prompt}]
    req = Request("expert", round_no, task.id, msgs, 0, task, analyses, tuple(history))
    owners = analyses.task_of_function()
    return _ask(backend, req, lambda text: parse_report(text, analyses.model, owners))


def judge_validate(
    report: DefectReport,
    task: DetectionTask,
    backend: ChatBackend,
    history: Sequence[ConversationEntry],
    analyses: Analyses,
    round_no: int = 1,
) -> tuple[list[Verdict], str]:
    """One Judge turn: a verdict per reported violation and free-text feedback."""
    if report.status != "violations":
        raise ValueError("only a report with violations can be judged")
    owners = analyses.task_of_function()
    prompt = build_judge_prompt(report, task, analyses.flow, owners, history, analyses.config.prompt_budget)
    msgs = [{"role": "system", "content": JUDGE_SYSTEM}, {"role": "user", "content": prompt}]
    req = Request("judge", round_no, task.id, msgs, 0, task, analyses, tuple(history), report)
    n = len(report.violations)
    return _ask(backend, req, lambda text: parse_verdicts(text, n))


def curate_history(entries: Sequence[ConversationEntry], budget: int) -> list[ConversationEntry]:
    """Most recent rounds that fit ``budget`` characters, plus round 1's Expert purpose.

    Rounds are kept or dropped whole. When round 1 does not fit, its Expert
    entry survives as a stub carrying only the purpose so the conversation's
    goal stays visible.
    """
    if not entries:
        return []
    rounds: dict[int, list[ConversationEntry]] = {}
    for e in entries:
        rounds.setdefault(e.round, []).append(e)
    first = min(rounds)
    kept: list[int] = []
    used = 0
    for r in sorted(rounds, reverse=True):
        size = sum(len(e.content) for e in rounds[r])
        if used + size > budget:
            break
        kept.append(r)
        used += size
    out: list[ConversationEntry] = []
    if first not in kept:
        lead = next((e for e in rounds[first] if e.role == "Expert"), None)
        if lead is not None:
            out.append(ConversationEntry(lead.role, lead.round, lead.purpose, f"(round {first} omitted; purpose: {lead.purpose})"))
    for r in sorted(kept):
        out.extend(rounds[r])
    return out


@dataclass
class ConversationResult:
    task_id: str
    report: DefectReport
    entries: list[ConversationEntry] = field(default_factory=list)
    rounds: int = 0
    stop_reason: str = ""

    def transcript(self) -> str:
        data = {
            "task": self.task_id,
            "rounds": self.rounds,
            "stop_reason": self.stop_reason,
            "entries": [e.to_json() for e in self.entries],
            "final": self.report.to_json(),
        }
        return json.dumps(data, indent=2, sort_keys=True) + "\n"


def run_conversation(
    task: DetectionTask,
    expert: ChatBackend,
    judge: ChatBackend,
    analyses: Analyses,
    max_rounds: int | None = None,
    transcript_dir: str | Path | None = None,
) -> ConversationResult:
    """Alternate Expert and Judge until a stop condition; the result holds only confirmed violations."""
    n = max_rounds if max_rounds is not None else analyses.config.backend.max_rounds
    if n < 1:
        raise ValueError("max_rounds must be >= 1")
    budget = analyses.config.history_budget
    entries: list[ConversationEntry] = []
    confirmed = DefectReport("no_defect")
    res = ConversationResult(task.id, confirmed)
    for r in range(1, n + 1):
        res.rounds = r
        history = curate_history(entries, budget)
        try:
            report = expert_detect(task, expert, history, analyses, r)
        except BackendUnavailable:
            if r == 1:
                raise
            res.report = DefectReport.of(confirmed.violations, incomplete=True)
            res.stop_reason = "backend unavailable"
            break
        entries.append(ConversationEntry("Expert", r, "detect" if r == 1 else "refine", report.dumps()))
        if report.status != "violations":
            res.report = confirmed
            res.stop_reason = report.status
            break
        if r > 1 and report.keys() <= confirmed.keys():
            res.report = DefectReport.of(v for v in confirmed.violations if v.key in report.keys())
            res.stop_reason = "no new violations"
            break
        try:
            verdicts, feedback = judge_validate(report, task, judge, history, analyses, r)
        except BackendUnavailable:
            res.report = DefectReport.of(confirmed.violations, incomplete=True)
            res.stop_reason = "backend unavailable"
            break
        entries.append(ConversationEntry("Judge", r, "validate", verdicts_json(verdicts, feedback)))
        confirmed = DefectReport.of(v for v, d in zip(report.violations, verdicts) if d.confirmed)
        res.report = confirmed
        res.stop_reason = "max rounds"
    res.entries = entries
    if transcript_dir is not None:
        p = Path(transcript_dir)
        p.mkdir(parents=True, exist_ok=True)
        (p / f"{task.id}.json").write_text(res.transcript(), encoding="utf-8")
    return res
