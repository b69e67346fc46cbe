"""End-to-end analysis of one program: plan, partition, converse, merge."""

from __future__ import annotations

import dataclasses
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .agents.backends import ChatBackend, OracleBackend
from .agents.conversation import ConversationResult, run_conversation
from .agents.reports import DefectReport
from .config import AnalysisConfig
from .errors import PromptOverBudget
from .extractor import extract, reachable_functions
from .model import ProgramModel, parse_program
from .orchestrator import Analyses, CodeSummary, DetectionTask, plan, prepare_tasks, summarize


@dataclass
class ProgramResult:
    name: str
    analyses: Analyses
    summary: CodeSummary
    tasks: list[DetectionTask]
    conversations: list[ConversationResult] = field(default_factory=list)

    @property
    def report(self) -> DefectReport:
        vs = [v for c in self.conversations for v in c.report.violations]
        return DefectReport.of(vs, incomplete=any(c.report.incomplete for c in self.conversations))

    def to_json(self) -> dict:
        return {
            "program": self.name,
            "tools": list(self.analyses.tools),
            "tasks": [
                {"id": c.task_id, "rounds": c.rounds, "stop_reason": c.stop_reason, "report": c.report.to_json()}
                for c in self.conversations
            ],
            "report": self.report.to_json(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def force_extraction(a: Analyses) -> Analyses:
    """A copy of the bundle whose tasks will see the compressed source."""
    if a.compressed is not None:
        return a
    comp = extract(a.model.source_text, a.model, reachable_functions(a.entry, a.callgraph))
    return dataclasses.replace(a, compressed=comp, tools=a.tools + ("code_extractor",))


def analyze_model(
    model: ProgramModel,
    config: AnalysisConfig | None = None,
    expert: ChatBackend | None = None,
    judge: ChatBackend | None = None,
    max_rounds: int | None = None,
    transcript_dir: str | Path | None = None,
    workers: int = 1,
    name: str = "program",
) -> ProgramResult:
    """Run every detection task's Expert/Judge pair and merge the confirmed reports."""
    config = config or AnalysisConfig()
    analyses, summary = plan(model, config)
    oracle = None
    if expert is None or judge is None:
        oracle = OracleBackend(config)
    expert = expert or oracle
    judge = judge or oracle
    tasks = prepare_tasks(analyses, summary)

    def one(task: DetectionTask) -> ConversationResult:
        try:
            return run_conversation(task, expert, judge, analyses, max_rounds, transcript_dir)
        except PromptOverBudget:
            if analyses.compressed is not None:
                raise
            smaller = force_extraction(analyses)
            retry = next(t for t in prepare_tasks(smaller, summarize(smaller)) if t.id == task.id)
            return run_conversation(retry, expert, judge, smaller, max_rounds, transcript_dir)

    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            convs = list(pool.map(one, tasks))
    else:
        convs = [one(t) for t in tasks]
    return ProgramResult(name, analyses, summary, tasks, convs)


def analyze_source(source: str, config: AnalysisConfig | None = None, **kw) -> ProgramResult:
    config = config or AnalysisConfig()
    return analyze_model(parse_program(source, config), config, **kw)
