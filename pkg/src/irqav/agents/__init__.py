"""Expert and Judge agents, their backends and the conversation loop."""

from .backends import HttpBackend, OracleBackend, ReplayBackend, Request, make_backend
from .conversation import ConversationEntry, ConversationResult, curate_history, expert_detect, judge_validate, run_conversation
from .knowledge import MODULES, KnowledgeModule, module_for, modules_for
from .prompts import build_expert_prompt, build_judge_prompt
from .reports import DefectReport, OpRef, ReportedViolation, Verdict, parse_report, parse_verdicts

__all__ = [
    "ConversationEntry",
    "ConversationResult",
    "DefectReport",
    "HttpBackend",
    "KnowledgeModule",
    "MODULES",
    "OpRef",
    "OracleBackend",
    "ReplayBackend",
    "ReportedViolation",
    "Request",
    "Verdict",
    "build_expert_prompt",
    "build_judge_prompt",
    "curate_history",
    "expert_detect",
    "judge_validate",
    "make_backend",
    "module_for",
    "modules_for",
    "parse_report",
    "parse_verdicts",
    "run_conversation",
]
