from types import SimpleNamespace

import pytest
from hypothesis import given, settings, strategies as st

from irqav.config import AnalysisConfig
from irqav.highlighter import PATTERNS
from irqav.model import parse_program
from irqav.orchestrator import CodeSummary, annotate_source, partition_tasks, plan, prepare_tasks, strip_annotations

from conftest import CORPUS, corpus_files


def fake_summary(per_var, per_pattern=None):
    return CodeSummary(
        accesses={},
        control_points=(),
        candidates_per_pattern=per_pattern or {p: 0 for p in PATTERNS},
        candidates_per_var=dict(per_var),
        var_order=tuple(per_var),
        call_edges=(),
        external_calls=(),
        tasks={"main": 0},
        compressed=False,
    )


def fake_cands(per_var, pattern="RWW"):
    out = []
    for v, n in per_var.items():
        out += [SimpleNamespace(var=SimpleNamespace(key=v), pattern=pattern)] * n
    return out


def test_devval_plan(devval):
    analyses, summary = plan(devval)
    assert analyses.tools == ("access_analysis", "flow_analysis", "highlighter")
    assert summary.candidates_per_pattern == {"RWR": 0, "WWR": 0, "RWW": 7, "WRW": 0}
    assert summary.accesses["DevVal"] == {
        "main": {"R": 1, "W": 2},
        "ISR_1": {"R": 0, "W": 1},
        "ISR_2": {"R": 1, "W": 1},
        "ISR_3": {"R": 1, "W": 1},
    }
    assert len(summary.control_points) == 3
    assert not summary.compressed


def test_devval_single_pattern_task(devval):
    analyses, summary = plan(devval)
    tasks = prepare_tasks(analyses, summary)
    assert [(t.id, t.strategy, t.variables, t.patterns, len(t.candidates)) for t in tasks] == [
        ("pattern_RWW", "PatternBased", ("DevVal",), ("RWW",), 7)
    ]


def test_oversized_source_triggers_extraction():
    src = (CORPUS / "13_dead_code.c").read_text()
    cfg = AnalysisConfig(context_budget=100)
    analyses, summary = plan(parse_program(src, cfg), cfg)
    assert "code_extractor" in analyses.tools
    assert summary.compressed and summary.line_map
    (task,) = prepare_tasks(analyses, summary)[:1]
    assert "/* elided: unused_a */" in task.annotated_source
    assert strip_annotations(task.annotated_source) == analyses.compressed.text


def test_no_shared_globals_no_tasks():
    m = parse_program("int g;\nint h;\nint main(){\n g = 1;\n}\nvoid ISR_1(){\n h = 2;\n}")
    analyses, summary = plan(m)
    assert "highlighter" not in analyses.tools
    assert summary.candidates_per_pattern == {p: 0 for p in PATTERNS}
    assert prepare_tasks(analyses, summary) == []


def test_flow_skipped_without_calls_or_control_points():
    m = parse_program("int g;\nint main(){\n g = g + 1;\n}\nvoid ISR_1(){\n g = 2;\n}")
    analyses, _ = plan(m)
    assert "flow_analysis" not in analyses.tools


def test_variable_grouping_rule():
    per_var = {"v1": 9, "v2": 2, "v3": 1, "v4": 1, "v5": 1}
    tasks = partition_tasks(fake_summary(per_var), fake_cands(per_var), AnalysisConfig(high_frequency_threshold=8))
    assert [t.variables for t in tasks] == [("v1",), ("v2", "v3", "v4"), ("v5",)]
    assert {t.strategy for t in tasks} == {"VariableBased"}


def test_uneven_patterns_switch_to_variables():
    cands = fake_cands({"a": 1}, "RWR") + fake_cands({"a": 5}, "RWW")
    summary = fake_summary({"a": 6}, {"RWR": 1, "WWR": 0, "RWW": 5, "WRW": 0})
    (task,) = partition_tasks(summary, cands)
    assert task.strategy == "VariableBased" and task.patterns == ("RWR", "RWW")


def test_zero_candidates_zero_tasks():
    assert partition_tasks(fake_summary({}), []) == []


@settings(max_examples=60, deadline=None)
@given(
    st.dictionaries(
        st.sampled_from(["a", "b", "c", "d", "e", "f"]),
        st.dictionaries(st.sampled_from(PATTERNS), st.integers(1, 12), min_size=1),
        min_size=1,
    )
)
def test_partition_is_exact_cover(layout):
    cands = []
    per_var, per_pat = {}, {p: 0 for p in PATTERNS}
    for v, pats in layout.items():
        for p, n in pats.items():
            cands += fake_cands({v: n}, p)
            per_var[v] = per_var.get(v, 0) + n
            per_pat[p] += n
    tasks = partition_tasks(fake_summary(per_var, per_pat), cands)
    covered = [cell for t in tasks for cell in t.coverage]
    assert len(covered) == len(set(covered))
    assert set(covered) == {(v, p) for v, pats in layout.items() for p in pats}


def test_devval_annotation(devval):
    analyses, summary = plan(devval)
    (task,) = prepare_tasks(analyses, summary)
    lines = task.annotated_source.split("\n")
    assert lines[4].startswith("   5 | ")
    assert "R(DevVal) in main [main/p0]" in lines[4]
    assert "ISR_1=E ISR_2=D ISR_3=D" in lines[4]
    assert lines[1] == "   2 | int main() {"


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
def test_annotation_strips_back_to_source(path):
    src = path.read_text()
    analyses, summary = plan(parse_program(src))
    for t in prepare_tasks(analyses, summary):
        assert strip_annotations(t.annotated_source) == src


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
def test_summary_counts_match_analyses(path):
    analyses, summary = plan(parse_program(path.read_text()))
    for p in PATTERNS:
        assert summary.candidates_per_pattern[p] == sum(c.pattern == p for c in analyses.candidates)
    for v, n in summary.candidates_per_var.items():
        assert n == sum(c.var.key == v for c in analyses.candidates)
    for v, per_task in summary.accesses.items():
        for task, ops in per_task.items():
            evs = [e for e in analyses.graphs[task].events() if e.var.key == v]
            assert ops == {"R": sum(e.op == "R" for e in evs), "W": sum(e.op == "W" for e in evs)}
    assert summary.render() == summary.render()


line_text = st.text(alphabet=st.characters(blacklist_characters="\n\r", blacklist_categories=("Cs",)), max_size=30)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.one_of(line_text, st.just("x = 1; // [AV] note"), st.just("   7 | y")), min_size=1, max_size=8), st.booleans())
def test_strip_inverts_annotate_on_arbitrary_text(lines, trailing_newline, ):
    from irqav.orchestrator import DetectionTask

    src = "int DevVal;\nint main(){\n DevVal = 1;\n}\nvoid ISR_1(){\n DevVal = 2;\n}\n"
    analyses, summary = plan(parse_program(src))
    (task,) = prepare_tasks(analyses, summary) or [DetectionTask("t", "PatternBased", ("DevVal",), ("RWW",), frozenset())]
    text = "\n".join(lines) + ("\n" if trailing_newline else "")
    assert strip_annotations(annotate_source(text, task, analyses)) == text
