import json

import httpx
import pytest

from irqav.agents import knowledge
from irqav.agents.backends import HttpBackend, OracleBackend, ReplayBackend, Request, assistant_text, rejected_keys
from irqav.agents.conversation import ConversationEntry, curate_history, expert_detect, judge_validate, run_conversation
from irqav.agents.knowledge import MODULES, module_for, modules_for
from irqav.agents.prompts import build_expert_prompt, build_judge_prompt
from irqav.agents.reports import DefectReport, OpRef, ReportedViolation, extract_json, parse_report, parse_verdicts
from irqav.config import AnalysisConfig, BackendConfig
from irqav.errors import BackendUnavailable, MalformedReply, PromptOverBudget
from irqav.harness import GroundTruth, oracle_truth, truth_path
from irqav.highlighter import PATTERNS
from irqav.model import parse_program
from irqav.orchestrator import plan, prepare_tasks
from irqav.pipeline import analyze_model

from conftest import corpus_files

DEVVAL_CONFIRMED = {
    ("DevVal", "RWW", (5, "R"), (14, "W"), (6, "W")),
    ("DevVal", "RWW", (5, "R"), (17, "W"), (6, "W")),
}


@pytest.fixture()
def devval_task(devval):
    analyses, summary = plan(devval)
    (task,) = prepare_tasks(analyses, summary)
    return analyses, task


def viol(a1, a2, a3, var="DevVal"):
    refs = [OpRef(l, op, f) for f, l, op in (a1, a2, a3)]
    return ReportedViolation(var, "".join(r.op for r in refs), *refs)


def report_text(*vs):
    return json.dumps({"status": "violations", "violations": [v.to_json() for v in vs]})


def verdict_text(*confirmed):
    return json.dumps({"verdicts": [{"id": i, "verdict": "confirmed" if c else "rejected", "reason": "r"} for i, c in enumerate(confirmed, 1)], "feedback": ""})


def write_replay(root, task_id, files):
    d = root / task_id
    d.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (d / name).write_text(text)
    return ReplayBackend(root)


# -- knowledge modules ---------------------------------------------------------------


def test_one_module_per_pattern():
    assert list(MODULES) == list(PATTERNS)
    assert all(MODULES[p].pattern == p for p in PATTERNS)
    for p in PATTERNS:
        m = module_for(p)
        ex = m.example_report["violations"][0]
        assert ex["pattern"] == p
        assert "".join(ex[k]["op"] for k in ("a1", "a2", "a3")) == p
        parse_report(json.dumps(m.example_report), parse_program(m.example_code))


def test_module_examples_are_not_fixtures():
    fixtures = [p.read_text() for p in corpus_files()]
    for m in MODULES.values():
        body = m.example_code.strip()
        assert all(body not in f for f in fixtures)


def test_unknown_pattern_module():
    with pytest.raises(KeyError):
        module_for("RRW")


# -- prompts -------------------------------------------------------------------------


def test_expert_prompt_sections(devval_task):
    _, task = devval_task
    text = build_expert_prompt(task, modules_for(task.patterns))
    heads = ["## Detection Task", "## Detection Rules", "## Output Format", "## Code Summary", "## Annotated Source"]
    pos = [text.index(h) for h in heads]
    assert pos == sorted(pos)
    assert "## History" not in text
    assert "Decompose compound operations" in text
    assert "Test all priority level combinations" in text
    assert "R(DevVal) in main [main/p0]" in text


def test_expert_prompt_rejects_foreign_module(devval_task):
    _, task = devval_task
    with pytest.raises(ValueError):
        build_expert_prompt(task, module_for("RWR"))


def test_expert_prompt_history_block(devval_task):
    _, task = devval_task
    hist = [
        ConversationEntry("Expert", 1, "detect", '{"status": "no_defect", "violations": []}'),
        ConversationEntry("Judge", 1, "validate", '{"verdicts": [], "feedback": "ok"}'),
    ]
    text = build_expert_prompt(task, modules_for(task.patterns), hist)
    assert text.endswith(
        "## History\n"
        "### Round 1 | Expert | detect\n"
        '{"status": "no_defect", "violations": []}\n\n'
        "### Round 1 | Judge | validate\n"
        '{"verdicts": [], "feedback": "ok"}\n'
    )


def test_prompt_over_budget(devval_task):
    _, task = devval_task
    full = build_expert_prompt(task, modules_for(task.patterns))
    assert build_expert_prompt(task, modules_for(task.patterns), budget=len(full)) == full
    with pytest.raises(PromptOverBudget):
        build_expert_prompt(task, modules_for(task.patterns), budget=len(full) - 1)


def test_judge_prompt_lists_states(devval_task):
    analyses, task = devval_task
    rep = DefectReport.of([viol(("main", 5, "R"), ("ISR_3", 20, "W"), ("main", 6, "W"))])
    text = build_judge_prompt(rep, task, analyses.flow, analyses.task_of_function())
    assert "1. {" in text
    assert "ISR_3 line 20" in text
    assert "## Validation Rules" in text and "## Interrupt States" in text


def test_prompts_deterministic(devval):
    texts = []
    for _ in range(2):
        analyses, summary = plan(parse_program(devval.source_text))
        (task,) = prepare_tasks(analyses, summary)
        texts.append(build_expert_prompt(task, modules_for(task.patterns)))
    assert texts[0] == texts[1]


# -- reply parsing -------------------------------------------------------------------


def test_extract_json_tolerates_fences():
    assert extract_json('Sure:\n```json\n{"a": 1}\n```\nbye') == {"a": 1}
    assert extract_json('noise {"a": 2} trailing') == {"a": 2}
    with pytest.raises(MalformedReply):
        extract_json("no object here")


def test_parse_rejects_non_pattern(devval):
    bad = json.dumps({"status": "violations", "violations": [{"var": "DevVal", "pattern": "WWW",
        "a1": {"line": 6, "op": "W"}, "a2": {"line": 14, "op": "W"}, "a3": {"line": 8, "op": "W"}}]})
    with pytest.raises(MalformedReply, match="not an atomicity-violation pattern"):
        parse_report(bad, devval)


def test_parse_rejects_mismatched_ops_and_lines(devval):
    v = viol(("main", 5, "R"), ("ISR_1", 14, "W"), ("main", 6, "W")).to_json()
    v["pattern"] = "RWR"
    with pytest.raises(MalformedReply, match="do not match"):
        parse_report(json.dumps({"status": "violations", "violations": [v]}), devval)
    far = viol(("main", 5, "R"), ("ISR_1", 99, "W"), ("main", 6, "W"))
    with pytest.raises(MalformedReply, match="outside"):
        parse_report(report_text(far), devval)


def test_parse_rejects_lower_priority_a2(devval_task):
    analyses, _ = devval_task
    inverted = viol(("ISR_2", 17, "R"), ("main", 6, "W"), ("ISR_2", 17, "W"))
    with pytest.raises(MalformedReply, match="higher-priority"):
        parse_report(report_text(inverted), analyses.model, analyses.task_of_function())


def test_parse_no_defect_and_abstain():
    assert parse_report('{"status": "no_defect", "violations": []}').status == "no_defect"
    assert parse_report('{"status": "abstain"}').status == "abstain"
    with pytest.raises(MalformedReply):
        parse_report('{"status": "maybe"}')


def test_parse_verdicts_requires_every_id():
    vs, fb = parse_verdicts('{"verdicts": [{"id": 2, "verdict": "rejected"}, {"id": 1, "verdict": "confirmed"}], "feedback": "x"}', 2)
    assert [(v.id, v.confirmed) for v in vs] == [(1, True), (2, False)] and fb == "x"
    for bad in ('{"verdicts": [{"id": 1, "verdict": "confirmed"}]}', '{"verdicts": [{"id": 1, "verdict": "maybe"}, {"id": 2, "verdict": "rejected"}]}'):
        with pytest.raises(MalformedReply):
            parse_verdicts(bad, 2)


def test_defect_report_dedupes_and_sorts():
    a = viol(("main", 5, "R"), ("ISR_2", 17, "W"), ("main", 6, "W"))
    b = viol(("main", 5, "R"), ("ISR_1", 14, "W"), ("main", 6, "W"))
    rep = DefectReport.of([a, b, a])
    assert [v.a2.line for v in rep.violations] == [14, 17]
    assert DefectReport.of([]).status == "no_defect"


def test_match_key_ignores_function_names():
    a = viol(("main", 5, "R"), ("ISR_1", 14, "W"), ("main", 6, "W"))
    b = viol(("", 5, "R"), ("", 14, "W"), ("", 6, "W"))
    assert a.key == b.key


# -- replay backend ------------------------------------------------------------------


def test_replay_no_defect(tmp_path, devval_task):
    analyses, task = devval_task
    be = write_replay(tmp_path, task.id, {"round1-expert.txt": '{"status": "no_defect", "violations": []}'})
    res = run_conversation(task, be, be, analyses)
    assert res.report.status == "no_defect" and res.rounds == 1 and res.stop_reason == "no_defect"
    assert [e.role for e in res.entries] == ["Expert"]


def test_malformed_reply_gets_one_reformat_retry(tmp_path, devval_task):
    analyses, task = devval_task
    www = json.dumps({"status": "violations", "violations": [{"var": "DevVal", "pattern": "WWW",
        "a1": {"line": 6, "op": "W"}, "a2": {"line": 14, "op": "W"}, "a3": {"line": 8, "op": "W"}}]})
    good = viol(("main", 5, "R"), ("ISR_1", 14, "W"), ("main", 6, "W"))
    be = write_replay(tmp_path, task.id, {"round1-expert.txt": www, "round1-expert-retry.txt": report_text(good)})
    rep = expert_detect(task, be, [], analyses)
    assert rep.keys() == {good.key}


def test_malformed_twice_raises(tmp_path, devval_task):
    analyses, task = devval_task
    be = write_replay(tmp_path, task.id, {"round1-expert.txt": "nope", "round1-expert-retry.txt": "still nope"})
    with pytest.raises(MalformedReply):
        expert_detect(task, be, [], analyses)


def test_missing_replay_file_is_unavailable(tmp_path, devval_task):
    analyses, task = devval_task
    with pytest.raises(BackendUnavailable):
        run_conversation(task, ReplayBackend(tmp_path), ReplayBackend(tmp_path), analyses)


def test_adversarial_expert_stops_at_round_limit(tmp_path, devval_task):
    analyses, task = devval_task
    rounds = [
        viol(("main", 5, "R"), ("ISR_1", 14, "W"), ("main", 6, "W")),
        viol(("main", 5, "R"), ("ISR_2", 17, "W"), ("main", 6, "W")),
        viol(("main", 5, "R"), ("ISR_3", 20, "W"), ("main", 6, "W")),
    ]
    files = {}
    for i, v in enumerate(rounds, 1):
        files[f"round{i}-expert.txt"] = report_text(v)
        files[f"round{i}-judge.txt"] = verdict_text(True)
    files["round4-expert.txt"] = report_text(viol(("main", 5, "R"), ("ISR_1", 14, "W"), ("main", 8, "W")))
    be = write_replay(tmp_path, task.id, files)
    res = run_conversation(task, be, be, analyses, max_rounds=3)
    assert res.rounds == 3 and res.stop_reason == "max rounds"
    assert res.report.keys() == {rounds[2].key}


def test_judge_rejections_never_reach_report(tmp_path, devval_task):
    analyses, task = devval_task
    a = viol(("main", 5, "R"), ("ISR_1", 14, "W"), ("main", 6, "W"))
    b = viol(("main", 5, "R"), ("ISR_3", 20, "W"), ("main", 6, "W"))
    be = write_replay(tmp_path, task.id, {
        "round1-expert.txt": report_text(a, b),
        "round1-judge.txt": verdict_text(True, False),
        "round2-expert.txt": report_text(a),
    })
    res = run_conversation(task, be, be, analyses)
    assert res.report.keys() == {a.key}
    assert res.rounds == 2 and res.stop_reason == "no new violations"


# -- oracle backend on the motivating example ----------------------------------------


def test_devval_conversation(devval_task):
    analyses, task = devval_task
    oracle = OracleBackend()
    res = run_conversation(task, oracle, oracle, analyses)
    assert res.rounds == 2 and res.stop_reason == "no new violations"
    assert res.report.keys() == DEVVAL_CONFIRMED
    first = parse_report(res.entries[0].content)
    assert len(first.violations) == 5
    verdicts, _ = parse_verdicts(res.entries[1].content, 5)
    rejected = [(v, d) for v, d in zip(first.violations, verdicts) if not d.confirmed]
    assert len(rejected) == 3
    for v, d in rejected:
        assert v.a2.function == "ISR_3" and v.a2.line == 20
        assert d.reason == "line 20 never executes: ISR_3 is never enabled"
    second = parse_report(res.entries[2].content)
    assert second.keys() == DEVVAL_CONFIRMED


def test_devval_judge_alone(devval_task):
    analyses, task = devval_task
    rep = DefectReport.of([
        viol(("main", 5, "R"), ("ISR_1", 14, "W"), ("main", 6, "W")),
        viol(("main", 5, "R"), ("ISR_3", 20, "W"), ("main", 8, "W")),
    ])
    verdicts, feedback = judge_validate(rep, task, OracleBackend(), [], analyses)
    assert [v.confirmed for v in verdicts] == [True, False]
    assert "1 confirmed, 1 rejected" in feedback


def test_rejected_keys_from_history():
    a = viol(("main", 5, "R"), ("ISR_3", 20, "W"), ("main", 6, "W"))
    hist = [ConversationEntry("Expert", 1, "detect", report_text(a)), ConversationEntry("Judge", 1, "validate", verdict_text(False))]
    assert rejected_keys(hist) == {a.key}
    assert rejected_keys(hist[:1]) == set()


def test_first_round_no_defect_stops(tmp_path):
    m = parse_program(next(p for p in corpus_files() if p.stem == "14_never_enabled").read_text())
    analyses, summary = plan(m)
    oracle = OracleBackend()
    for task in prepare_tasks(analyses, summary):
        res = run_conversation(task, oracle, oracle, analyses)
        assert res.stop_reason in ("no_defect", "no new violations")
        assert res.report.status == "no_defect"


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
def test_oracle_is_exact_on_corpus(path):
    model = parse_program(path.read_text())
    got = analyze_model(model, name=path.stem).report
    want = GroundTruth.load(truth_path(path), model)
    assert got.keys() == {v.key for v in want.violations}
    assert want.violations == oracle_truth(model, name=path.stem).violations


def test_transcripts_are_deterministic(tmp_path, devval):
    outs = []
    for i in range(2):
        d = tmp_path / str(i)
        analyze_model(parse_program(devval.source_text), transcript_dir=d)
        outs.append({p.name: p.read_bytes() for p in d.iterdir()})
    assert outs[0] == outs[1] and list(outs[0]) == ["pattern_RWW.json"]


def test_parallel_tasks_match_serial():
    path = next(p for p in corpus_files() if p.stem == "15_ring_buffer")
    a = analyze_model(parse_program(path.read_text()), workers=1).to_json()
    b = analyze_model(parse_program(path.read_text()), workers=4).to_json()
    assert a == b


# -- history curation ----------------------------------------------------------------


def _entries(sizes):
    out = []
    for r, (e, j) in enumerate(sizes, 1):
        out.append(ConversationEntry("Expert", r, "detect" if r == 1 else "refine", "e" * e))
        out.append(ConversationEntry("Judge", r, "validate", "j" * j))
    return out


def test_curate_keeps_everything_that_fits():
    es = _entries([(10, 10), (10, 10)])
    assert curate_history(es, 40) == es


def test_curate_drops_oldest_whole_rounds():
    es = _entries([(10, 10), (10, 10), (10, 10)])
    out = curate_history(es, 45)
    assert [(e.role, e.round) for e in out] == [("Expert", 1), ("Expert", 2), ("Judge", 2), ("Expert", 3), ("Judge", 3)]
    assert out[0].content == "(round 1 omitted; purpose: detect)"


def test_curate_budget_too_small_keeps_stub_only():
    out = curate_history(_entries([(10, 10), (50, 50)]), 5)
    assert [e.content for e in out] == ["(round 1 omitted; purpose: detect)"]
    assert curate_history([], 10) == []


# -- http backend --------------------------------------------------------------------


def _http(handler, **cfg):
    bc = BackendConfig(kind="http", endpoint="http://llm.test/v1/chat", model="m-1", **cfg)
    return HttpBackend(bc, client=httpx.Client(transport=httpx.MockTransport(handler)))


def test_http_request_shape(monkeypatch):
    monkeypatch.setenv("AV_LLM_KEY", "sekret")
    seen = {}

    def handler(req):
        seen["auth"] = req.headers.get("authorization")
        seen["body"] = json.loads(req.content)
        return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": "hi"}}]})

    be = _http(handler)
    msgs = [{"role": "user", "content": "x"}]
    assert be.complete(Request("expert", 1, "t", msgs)) == "hi"
    assert seen["auth"] == "Bearer sekret"
    assert seen["body"] == {"model": "m-1", "temperature": 0.0, "messages": msgs}


def test_http_records_replies(tmp_path):
    be = _http(lambda r: httpx.Response(200, json={"content": [{"type": "text", "text": "a"}, {"type": "text", "text": "b"}]}))
    be.record_dir = tmp_path
    assert be.complete(Request("judge", 2, "task_x", [])) == "ab"
    assert (tmp_path / "task_x" / "round2-judge.txt").read_text() == "ab"


@pytest.mark.parametrize("handler", [
    lambda r: httpx.Response(503, text="busy"),
    lambda r: httpx.Response(200, json={"unexpected": 1}),
    lambda r: (_ for _ in ()).throw(httpx.ConnectError("refused")),
])
def test_http_failures_are_unavailable(handler):
    with pytest.raises(BackendUnavailable):
        _http(handler).complete(Request("expert", 1, "t", []))


def test_http_without_endpoint(monkeypatch):
    monkeypatch.delenv("AV_LLM_ENDPOINT", raising=False)
    with pytest.raises(BackendUnavailable, match="no endpoint"):
        HttpBackend(BackendConfig(kind="http")).complete(Request("expert", 1, "t", []))


def test_assistant_text_shapes():
    assert assistant_text({"choices": [{"text": "t"}]}) == "t"
    assert assistant_text({"content": "plain"}) == "plain"


class FlakyAfter:
    """Delegates to a backend for the first n calls, then fails."""

    def __init__(self, inner, n):
        self.inner, self.n = inner, n

    def complete(self, req):
        if self.n <= 0:
            raise BackendUnavailable("gone")
        self.n -= 1
        return self.inner.complete(req)


def test_backend_loss_mid_run_returns_incomplete(devval_task):
    analyses, task = devval_task
    be = FlakyAfter(OracleBackend(), 2)
    res = run_conversation(task, be, be, analyses)
    assert res.report.incomplete and res.stop_reason == "backend unavailable"
    assert res.report.keys() == DEVVAL_CONFIRMED


def test_backend_loss_in_first_round_raises(devval_task):
    analyses, task = devval_task
    be = FlakyAfter(OracleBackend(), 0)
    with pytest.raises(BackendUnavailable):
        run_conversation(task, be, be, analyses)
