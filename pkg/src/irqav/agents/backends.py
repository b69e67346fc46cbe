"""Chat backends: live HTTP, scripted replay, and a simulator-backed oracle."""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol, Sequence

import httpx

from ..config import AnalysisConfig, BackendConfig
from ..errors import BackendUnavailable, MalformedReply, TraceBudgetExceeded
from ..simulator import detect_dynamic, enumerate_traces, simulate
from .reports import ReportedViolation, extract_json, parse_report, parse_verdicts


@dataclass
class Request:
    role: str  # expert | judge
    round: int
    task_id: str
    messages: list[dict[str, str]]
    attempt: int = 0  # 1 for the reformat retry
    # structured context, only read by the oracle
    task: Any = None
    analyses: Any = None
    history: Sequence = ()
    report: Any = None


class ChatBackend(Protocol):
    def complete(self, req: Request) -> str: ...


def _reply_file(root: Path, req: Request) -> Path:
    suffix = "-retry" if req.attempt else ""
    return root / req.task_id / f"round{req.round}-{req.role}{suffix}.txt"


class HttpBackend:
    """Chat-completion style JSON over HTTP.

    The endpoint, model name and key come from the config or from
    ``AV_LLM_ENDPOINT``, ``AV_LLM_MODEL`` and ``AV_LLM_KEY``.
    """

    def __init__(self, config: BackendConfig | None = None, client: httpx.Client | None = None, record_dir: str | None = None):
        self.config = config or BackendConfig.from_env()
        self.endpoint = self.config.endpoint or os.environ.get("AV_LLM_ENDPOINT")
        self.model = self.config.model or os.environ.get("AV_LLM_MODEL")
        self.key = os.environ.get(self.config.api_key_env)
        self.client = client or httpx.Client(timeout=self.config.timeout_s)
        self.record_dir = Path(record_dir) if record_dir else None

    def complete(self, req: Request) -> str:
        if not self.endpoint:
            raise BackendUnavailable("no endpoint configured (set AV_LLM_ENDPOINT)")
        headers = {"Content-Type": "application/json"}
        if self.key:
            headers["Authorization"] = f"Bearer {self.key}"
        body = {"model": self.model, "temperature": self.config.temperature, "messages": req.messages}
        try:
            resp = self.client.post(self.endpoint, json=body, headers=headers, timeout=self.config.timeout_s)
        except httpx.HTTPError as e:
            raise BackendUnavailable(f"request failed: {e}") from e
        if resp.status_code >= 400:
            raise BackendUnavailable(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            text = assistant_text(resp.json())
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise BackendUnavailable(f"unexpected response shape: {e}") from e
        if self.record_dir is not None:
            p = _reply_file(self.record_dir, req)
            p.parent.mkdir(parents=True, exist_ok=True)
            p.write_text(text, encoding="utf-8")
        return text


def assistant_text(data: Any) -> str:
    """Pull the assistant message out of the common response shapes."""
    if "choices" in data:
        msg = data["choices"][0]
        return msg["message"]["content"] if "message" in msg else msg["text"]
    content = data["content"]
    if isinstance(content, list):
        return "".join(part.get("text", "") for part in content)
    return str(content)


class ReplayBackend:
    """Replies read from ``<dir>/<task>/round<n>-<role>.txt`` (``-retry`` for reformat attempts)."""

    def __init__(self, root: str | os.PathLike[str]):
        self.root = Path(root)

    def complete(self, req: Request) -> str:
        p = _reply_file(self.root, req)
        try:
            return p.read_text(encoding="utf-8")
        except OSError as e:
            raise BackendUnavailable(f"no transcript for {req.task_id} round {req.round} {req.role}: {p}") from e


# -- oracle -------------------------------------------------------------------------------


@dataclass
class _Facts:
    ungated: list
    gated_keys: set[tuple]
    fired: set[str]
    executed: set[tuple[str, int]]  # (function, line) reached with gating
    copairs: set[tuple[str, int, int]]  # (task, line, line) inside one activation
    complete: bool = True


@dataclass
class OracleBackend:
    """Deterministic stand-in for both roles, driven by exhaustive simulation.

    As Expert it reports every violation the simulator finds when ISRs may fire
    regardless of the enable flags; as Judge it confirms exactly the ones that
    also occur when the flags are honoured.
    """

    config: AnalysisConfig | None = None
    _cache: dict[int, tuple[Any, _Facts]] = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def facts(self, analyses) -> _Facts:
        model = analyses.model
        with self._lock:
            hit = self._cache.get(id(model))
            if hit is not None and hit[0] is model:
                return hit[1]
        cfg = self.config or analyses.config
        ungated = simulate(model, cfg.sim, False, cfg)
        fired: set[str] = set()
        executed: set[tuple[str, int]] = set()
        copairs: set[tuple[str, int, int]] = set()
        gated: list = []
        complete = ungated.complete
        try:
            for t in enumerate_traces(model, cfg.sim, True, cfg):
                gated.append(t)
                per_inst: dict[int, set[int]] = {}
                for s in t.steps:
                    fired.add(s.task)
                    executed.add((s.function, s.line))
                    if s.var is not None:
                        per_inst.setdefault(s.instance, set()).add(s.line)
                tasks = t.instances()
                for i, ls in per_inst.items():
                    copairs.update((tasks[i], a, b) for a in ls for b in ls)
        except TraceBudgetExceeded:
            complete = False
        keys = {v.line_key for v in detect_dynamic(gated, model)}
        f = _Facts(ungated.violations, keys, fired, executed, copairs, complete)
        with self._lock:
            self._cache[id(model)] = (model, f)
        return f

    def complete(self, req: Request) -> str:
        if req.role == "expert":
            return self._expert(req)
        return self._judge(req)

    def _expert(self, req: Request) -> str:
        f = self.facts(req.analyses)
        rejected = rejected_keys(req.history)
        seen: set[tuple] = set()
        out = []
        for v in f.ungated:
            if (v.var.key, v.pattern) not in req.task.coverage:
                continue
            rv = ReportedViolation.from_dynamic(
                v,
                f"{v.a2.function} can {'write' if v.a2.op == 'W' else 'read'} {v.var} between line {v.a1.line} and line {v.a3.line} of {v.task_low}",
            )
            if rv.key in rejected or rv.key in seen:
                continue
            seen.add(rv.key)
            out.append(rv)
        if not out:
            return json.dumps({"status": "no_defect", "violations": []})
        return json.dumps({"status": "violations", "violations": [v.to_json() for v in out]}, indent=2)

    def _judge(self, req: Request) -> str:
        f = self.facts(req.analyses)
        owners = req.analyses.task_of_function()
        verdicts = []
        for i, v in enumerate(req.report.violations, 1):
            if v.key in f.gated_keys:
                verdicts.append({"id": i, "verdict": "confirmed", "reason": f"witnessed: {v.a2.function} preempts between lines {v.a1.line} and {v.a3.line}"})
                continue
            verdicts.append({"id": i, "verdict": "rejected", "reason": self._why(v, f, owners)})
        n_rej = sum(d["verdict"] == "rejected" for d in verdicts)
        feedback = f"{len(verdicts) - n_rej} confirmed, {n_rej} rejected."
        if n_rej:
            feedback += " Drop the rejected triples and look for any violation not yet reported."
        return json.dumps({"verdicts": verdicts, "feedback": feedback}, indent=2)

    @staticmethod
    def _why(v: ReportedViolation, f: _Facts, owners: dict[str, list[str]]) -> str:
        highs = owners.get(v.a2.function, [])
        if highs and not any(h in f.fired for h in highs):
            return f"line {v.a2.line} never executes: {'/'.join(highs)} is never enabled"
        if (v.a2.function, v.a2.line) not in f.executed:
            return f"line {v.a2.line} never executes"
        lows = set(owners.get(v.a1.function, [])) & set(owners.get(v.a3.function, []))
        if not any((t, v.a1.line, v.a3.line) in f.copairs for t in lows):
            return f"unreachable-pair: lines {v.a1.line} and {v.a3.line} never execute in one activation"
        return f"no-interleaving: {v.a2.function} cannot run between line {v.a1.line} and line {v.a3.line}"


def rejected_keys(history: Sequence) -> set[tuple]:
    """Keys of violations the Judge rejected in earlier rounds, read back from the history."""
    reports: dict[int, list[ReportedViolation]] = {}
    out: set[tuple] = set()
    for e in history:
        try:
            if e.role == "Expert":
                reports[e.round] = list(parse_report(e.content).violations)
            elif e.role == "Judge" and e.round in reports:
                verdicts, _ = parse_verdicts(e.content, len(reports[e.round]))
                out.update(reports[e.round][x.id - 1].key for x in verdicts if not x.confirmed)
        except MalformedReply:
            continue
    return out


def make_backend(config: BackendConfig, analysis: AnalysisConfig | None = None) -> ChatBackend:
    if config.kind == "http":
        return HttpBackend(config)
    if config.kind == "replay":
        if not config.transcript_dir:
            raise BackendUnavailable("replay backend needs a transcript directory")
        return ReplayBackend(config.transcript_dir)
    return OracleBackend(analysis)


__all__ = ["Request", "ChatBackend", "HttpBackend", "ReplayBackend", "OracleBackend", "make_backend", "assistant_text", "rejected_keys", "extract_json"]
