"""Defect reports, judge verdicts, and strict parsing of model replies."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Iterable

from ..errors import MalformedReply
from ..highlighter import PATTERNS
from ..model.program import ProgramModel, var_key

STATUSES = ("violations", "no_defect", "abstain")


@dataclass(frozen=True, order=True)
class OpRef:
    line: int
    op: str
    function: str = ""

    def to_json(self) -> dict:
        return {"function": self.function, "line": self.line, "op": self.op}


@dataclass(frozen=True)
class ReportedViolation:
    var: str
    pattern: str
    a1: OpRef
    a2: OpRef
    a3: OpRef
    rationale: str = field(default="", compare=False)

    @property
    def key(self) -> tuple:
        """Match key: variable, pattern and the three (line, op) pairs."""
        return (var_key(self.var), self.pattern, (self.a1.line, self.a1.op), (self.a2.line, self.a2.op), (self.a3.line, self.a3.op))

    def to_json(self, rationale: bool = True) -> dict:
        d: dict[str, Any] = {
            "var": self.var,
            "pattern": self.pattern,
            "a1": self.a1.to_json(),
            "a2": self.a2.to_json(),
            "a3": self.a3.to_json(),
        }
        if rationale:
            d["rationale"] = self.rationale
        return d

    @classmethod
    def from_dynamic(cls, v, rationale: str = "") -> "ReportedViolation":
        return cls(
            v.var.key,
            v.pattern,
            OpRef(v.a1.line, v.a1.op, v.a1.function),
            OpRef(v.a2.line, v.a2.op, v.a2.function),
            OpRef(v.a3.line, v.a3.op, v.a3.function),
            rationale,
        )


@dataclass(frozen=True)
class DefectReport:
    status: str
    violations: tuple[ReportedViolation, ...] = ()
    incomplete: bool = False

    def keys(self) -> set[tuple]:
        return {v.key for v in self.violations}

    def to_json(self) -> dict:
        d: dict[str, Any] = {"status": self.status, "violations": [v.to_json() for v in self.violations]}
        if self.incomplete:
            d["incomplete"] = True
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    @classmethod
    def of(cls, violations: Iterable[ReportedViolation], incomplete: bool = False) -> "DefectReport":
        vs = tuple(sorted(dict.fromkeys(violations), key=lambda v: v.key))
        return cls("violations" if vs else "no_defect", vs, incomplete)


@dataclass(frozen=True)
class Verdict:
    id: int  # 1-based position in the judged report
    confirmed: bool
    reason: str = ""

    def to_json(self) -> dict:
        return {"id": self.id, "verdict": "confirmed" if self.confirmed else "rejected", "reason": self.reason}


# -- parsing -------------------------------------------------------------------

_FENCE = re.compile(r"```(?:json)?\s*(.*?)```", re.S)


def extract_json(text: str) -> Any:
    """The first JSON object in a reply, tolerating code fences and chatter."""
    m = _FENCE.search(text)
    if m:
        text = m.group(1)
    start = text.find("{")
    if start < 0:
        raise MalformedReply("reply contains no JSON object", text)
    try:
        obj, _ = json.JSONDecoder().raw_decode(text[start:])
    except json.JSONDecodeError as e:
        raise MalformedReply(f"invalid JSON: {e}", text) from None
    if not isinstance(obj, dict):
        raise MalformedReply("top-level JSON value must be an object", text)
    return obj


def _op_ref(d: Any, where: str, text: str) -> OpRef:
    if not isinstance(d, dict):
        raise MalformedReply(f"{where} must be an object", text)
    op = str(d.get("op", "")).upper()[:1]
    if op not in ("R", "W"):
        raise MalformedReply(f"{where}.op must be R or W", text)
    try:
        line = int(d["line"])
    except (KeyError, TypeError, ValueError):
        raise MalformedReply(f"{where}.line must be an integer", text) from None
    return OpRef(line, op, str(d.get("function", "")))


def parse_report(text: str, model: ProgramModel | None = None, tasks_of: dict[str, list[str]] | None = None) -> DefectReport:
    """Parse and validate an Expert reply.

    Besides the schema, every violation must have an op sequence matching its
    pattern, lines inside the program, and (when functions are given and
    ``tasks_of`` is known) an a2 function runnable at a strictly higher
    priority than the a1/a3 function.
    """
    obj = extract_json(text)
    status = obj.get("status")
    if status not in STATUSES:
        raise MalformedReply(f"status must be one of {STATUSES}", text)
    raw = obj.get("violations", [])
    if not isinstance(raw, list):
        raise MalformedReply("violations must be a list", text)
    if status != "violations":
        return DefectReport(status)
    out = []
    for i, v in enumerate(raw):
        if not isinstance(v, dict):
            raise MalformedReply(f"violation {i} must be an object", text)
        pattern = str(v.get("pattern", "")).upper().replace("<", "").replace(">", "").replace(",", "").replace(" ", "")
        a1, a2, a3 = (_op_ref(v.get(k), f"violations[{i}].{k}", text) for k in ("a1", "a2", "a3"))
        ops = a1.op + a2.op + a3.op
        if pattern not in PATTERNS:
            raise MalformedReply(f"violation {i}: {pattern!r} is not an atomicity-violation pattern", text)
        if ops != pattern:
            raise MalformedReply(f"violation {i}: ops {ops} do not match pattern {pattern}", text)
        var = str(v.get("var", "")).strip()
        if not var:
            raise MalformedReply(f"violation {i}: missing var", text)
        if model is not None:
            for ref in (a1, a2, a3):
                if not 1 <= ref.line <= model.line_count:
                    raise MalformedReply(f"violation {i}: line {ref.line} outside the program", text)
        if model is not None and tasks_of is not None and a1.function and a2.function and a3.function:
            _check_priority(i, a1, a2, a3, model, tasks_of, text)
        out.append(ReportedViolation(var, pattern, a1, a2, a3, str(v.get("rationale", ""))))
    if not out:
        return DefectReport("no_defect")
    return DefectReport("violations", tuple(out))


def _check_priority(i, a1, a2, a3, model, tasks_of, text) -> None:
    lows = set(tasks_of.get(a1.function, [])) & set(tasks_of.get(a3.function, []))
    highs = set(tasks_of.get(a2.function, []))
    if not lows or not highs:
        raise MalformedReply(f"violation {i}: unknown function in triple", text)
    if not any(model.priority(h) > model.priority(lo) for lo in lows for h in highs):
        raise MalformedReply(f"violation {i}: a2 must come from a strictly higher-priority task", text)


def parse_verdicts(text: str, n: int) -> tuple[list[Verdict], str]:
    """Parse a Judge reply with one verdict per reported violation."""
    obj = extract_json(text)
    raw = obj.get("verdicts")
    if not isinstance(raw, list):
        raise MalformedReply("verdicts must be a list", text)
    got: dict[int, Verdict] = {}
    for d in raw:
        if not isinstance(d, dict):
            raise MalformedReply("each verdict must be an object", text)
        try:
            vid = int(str(d.get("id")).lstrip("Vv#"))
        except ValueError:
            raise MalformedReply("verdict id must be an integer", text) from None
        kind = str(d.get("verdict", "")).lower()
        if kind not in ("confirmed", "rejected"):
            raise MalformedReply("verdict must be confirmed or rejected", text)
        if not 1 <= vid <= n:
            raise MalformedReply(f"verdict id {vid} out of range", text)
        got[vid] = Verdict(vid, kind == "confirmed", str(d.get("reason", "")))
    if set(got) != set(range(1, n + 1)):
        raise MalformedReply(f"expected verdicts for ids 1..{n}", text)
    return [got[i] for i in range(1, n + 1)], str(obj.get("feedback", ""))


def verdicts_json(verdicts: list[Verdict], feedback: str) -> str:
    return json.dumps({"verdicts": [v.to_json() for v in verdicts], "feedback": feedback}, indent=2, sort_keys=True)
