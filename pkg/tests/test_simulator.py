import pytest

from irqav.config import SimConfig
from irqav.errors import SimulationError, TraceBudgetExceeded
from irqav.model import parse_program
from irqav.simulator import detect_dynamic, enumerate_traces, simulate

from conftest import corpus_files


def lk(v):
    return (v.a1.function, v.a1.line, v.a2.function, v.a2.line, v.a3.line)


def test_devval_gated_and_ungated(devval):
    ungated = simulate(devval, respect_enable=False)
    gated = simulate(devval, respect_enable=True)
    assert (ungated.traces, gated.traces) == (460, 19)
    assert ungated.complete and gated.complete
    assert sorted(lk(v) for v in ungated.violations) == sorted(
        [
            ("main", 5, "ISR_1", 14, 6),
            ("main", 5, "ISR_2", 17, 6),
            ("main", 5, "ISR_3", 20, 6),
            ("main", 5, "ISR_3", 20, 8),
            ("ISR_2", 17, "ISR_3", 20, 17),
        ]
    )
    assert sorted(lk(v) for v in gated.violations) == [("main", 5, "ISR_1", 14, 6), ("main", 5, "ISR_2", 17, 6)]
    assert {v.pattern for v in ungated.violations} == {"RWW"}


def test_devval_problematic_interleavings_occur(devval):
    seqs = set()
    for t in enumerate_traces(devval):
        seqs.add(tuple((s.task, s.kind, s.line) for s in t.steps if s.var is not None))
    nested = (("main", "R", 5), ("ISR_2", "R", 17), ("ISR_2", "W", 17), ("ISR_1", "W", 14), ("main", "W", 6))
    single = (("main", "R", 5), ("ISR_1", "W", 14), ("main", "W", 6))
    assert nested in seqs
    assert single in seqs


def test_all_disabled_gives_one_trace():
    m = parse_program("int g;\nint main(){\n disable_isr(-1);\n g = 1;\n g = g + 2;\n}\nvoid ISR_1(){\n g = 0;\n}")
    assert len(list(enumerate_traces(m))) == 1


def test_three_boundaries_four_traces():
    m = parse_program("int g;\nint main(){\n g = 1;\n g = 2;\n g = 3;\n}\nvoid ISR_1(){\n g = 0;\n}")
    traces = list(enumerate_traces(m))
    assert len(traces) == 4
    where = sorted(next((i for i, s in enumerate(t.steps) if s.task == "ISR_1"), -1) for t in traces)
    assert where == [-1, 1, 2, 3]


def test_read_modify_write_single_rww():
    m = parse_program("int g = 0;\nint main(){\n int r = g;\n g = r + 1;\n}\nvoid ISR_1(){\n g = 5;\n}")
    res = simulate(m)
    assert res.traces == 3
    assert [(v.pattern, v.a1.line, v.a2.line, v.a3.line) for v in res.violations] == [("RWW", 3, 7, 4)]


def test_read_read_write_is_not_a_violation():
    m = parse_program("int g;\nint main(){\n int r = g;\n g = r + 1;\n}\nvoid ISR_1(){\n int x = g;\n}")
    assert simulate(m).violations == []


def test_trace_budget():
    m = parse_program("int g;\nint main(){\n g = 1;\n g = 2;\n g = 3;\n}\nvoid ISR_1(){\n g = 0;\n}")
    with pytest.raises(TraceBudgetExceeded):
        list(enumerate_traces(m, SimConfig(max_traces=2)))
    res = simulate(m, SimConfig(max_traces=2))
    assert not res.complete and res.traces == 2


def test_loop_bound_truncates():
    m = parse_program("int g;\nint main(){\n while (1) {\n g = g + 1;\n }\n}")
    (t,) = list(enumerate_traces(m, SimConfig(max_loop_iterations=3)))
    assert t.truncated
    assert sum(s.kind == "W" for s in t.steps) == 3


def test_more_firings_more_traces():
    m = parse_program("int g;\nint main(){\n g = 1;\n g = 2;\n}\nvoid ISR_1(){\n g = 0;\n}")
    one = len(list(enumerate_traces(m, SimConfig(max_firings_per_isr=1))))
    two = len(list(enumerate_traces(m, SimConfig(max_firings_per_isr=2))))
    assert (one, two) == (3, 6)


def test_runtime_faults():
    with pytest.raises(SimulationError):
        list(enumerate_traces(parse_program("int g;\nint main(){\n g = 1 / g;\n}")))
    with pytest.raises(SimulationError):
        list(enumerate_traces(parse_program("int a[2];\nint i = 2;\nint main(){\n a[i] = 1;\n}")))


def _check_trace_discipline(m, t):
    prio = dict(m.isr_table)
    first, last = {}, {}
    for i, s in enumerate(t.steps):
        first.setdefault(s.instance, i)
        last[s.instance] = i
    tasks = t.instances()
    for i, s in enumerate(t.steps):
        live = [k for k in first if first[k] <= i <= last[k]]
        assert prio[s.task] == max(prio[tasks[k]] for k in live)
        if first[s.instance] == i and s.task != "main":
            assert s.task in s.enabled


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
def test_priority_and_enable_discipline(path):
    m = parse_program(path.read_text())
    for t in enumerate_traces(m):
        _check_trace_discipline(m, t)


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
def test_enumeration_is_deterministic(path):
    m = parse_program(path.read_text())
    a = [(t.steps, t.final_globals, t.choices) for t in enumerate_traces(m)]
    b = [(t.steps, t.final_globals, t.choices) for t in enumerate_traces(m)]
    assert a == b


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
def test_witnesses_show_the_interleaving(path):
    m = parse_program(path.read_text())
    traces = list(enumerate_traces(m, respect_enable=False))
    for v in detect_dynamic(traces, m):
        steps = traces[v.witness].steps
        acc = [(i, s) for i, s in enumerate(steps) if s.var is not None and (s.var.base, s.var.index, s.var.field) == (v.var.base, v.var.index, v.var.field)]
        ok = False
        for x, (i, s1) in enumerate(acc):
            if (s1.function, s1.nid, s1.kind) != v.a1.site:
                continue
            same = [(j, s) for j, s in acc[x + 1 :] if s.instance == s1.instance]
            if not same:
                continue
            j, s3 = same[0]
            if (s3.function, s3.nid, s3.kind) != v.a3.site:
                continue
            between = [s for k, s in acc if i < k < j]
            if any((s.function, s.nid, s.kind) == v.a2.site and s.task == v.task_high for s in between):
                ok = True
        assert ok, v.to_json()


@pytest.mark.parametrize(
    "decl,expr,expected",
    [
        ("unsigned char c = 250;", "c + 10", 4),
        ("char c = 120;", "c + 10", -126),
        ("short c = 32767;", "c + 1", -32768),
        ("unsigned int c = 0;", "c - 1", 4294967295),
        ("int c = 2147483647;", "c + 1", -2147483648),
    ],
)
def test_stores_wrap_to_the_declared_type(decl, expr, expected):
    m = parse_program(f"{decl}\nint main(){{\n c = {expr};\n}}")
    (t,) = list(enumerate_traces(m))
    assert t.final_globals["c"] == expected
