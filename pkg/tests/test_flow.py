import pytest
from hypothesis import given, strategies as st

from irqav.access import analyze_accesses
from irqav.config import AnalysisConfig
from irqav.flow import ALL, InterruptState, IrqStatus, analyze_flow, external_calls, find_control_points, interrupt_state_at
from irqav.model import parse_program
from irqav.simulator import enumerate_traces

from conftest import corpus_files

E, D, U = IrqStatus.ENABLED, IrqStatus.DISABLED, IrqStatus.UNKNOWN


def test_devval_control_points(devval):
    pts = find_control_points(devval)
    assert [(p.function, p.line, p.kind, p.target) for p in pts] == [
        ("main", 3, "Disable", ALL),
        ("main", 4, "Enable", 1),
        ("ISR_1", 13, "Enable", 2),
    ]


def test_devval_state_in_main_after_setup(devval):
    st5 = interrupt_state_at(devval, None, "main", 5)
    assert st5.as_dict() == {"ISR_1": "Enabled", "ISR_2": "Disabled", "ISR_3": "Disabled"}


def test_branch_join_is_unknown():
    src = "int c;\nint main(){\n if (c) {\n enable_isr(2);\n } else {\n disable_isr(2);\n }\n c = 1;\n}\nvoid ISR_2(){\n c = 0;\n}"
    m = parse_program(src)
    assert interrupt_state_at(m, None, "main", 8)["ISR_2"] is U


def test_no_control_points_gives_initial_state():
    m = parse_program("int g;\nint main(){\n g = 1;\n}\nvoid ISR_1(){\n g = 2;\n}")
    assert find_control_points(m) == []
    assert interrupt_state_at(m, None, "main", 3)["ISR_1"] is E
    off = AnalysisConfig(initial_irq_state="disabled")
    assert interrupt_state_at(parse_program(m.source_text, off), None, "main", 3, off)["ISR_1"] is D


def test_external_calls_are_separate():
    m = parse_program("int g;\nint main(){\n log_value(g);\n disable_isr(1);\n}\nvoid ISR_1(){\n g = 2;\n}")
    pts = find_control_points(m)
    assert [(p.line, p.kind) for p in pts] == [(4, "Disable")]
    _, _, cg = analyze_accesses(m)
    assert [(e.name, e.line) for e in external_calls(cg)] == [("log_value", 3)]


def test_non_constant_target_is_unknown():
    m = parse_program("int k = 1;\nint main(){\n disable_isr(k);\n k = 2;\n}\nvoid ISR_1(){\n k = 3;\n}")
    (p,) = find_control_points(m)
    assert p.target is None and p.effect is U


def test_callee_effect_is_applied():
    src = "int g;\nvoid quiet(){\n disable_isr(-1);\n}\nint main(){\n quiet();\n g = 1;\n}\nvoid ISR_1(){\n g = 2;\n}"
    m = parse_program(src)
    assert interrupt_state_at(m, None, "main", 7)["ISR_1"] is D


statuses = st.sampled_from([E, D, U])


@given(statuses, statuses, statuses)
def test_status_join_is_a_semilattice(a, b, c):
    assert a.join(a) is a
    assert a.join(b) is b.join(a)
    assert a.join(b).join(c) is a.join(b.join(c))
    assert U.join(a) is U
    assert E.join(D) is U


@given(st.lists(statuses, min_size=2, max_size=2), st.lists(statuses, min_size=2, max_size=2))
def test_state_join_pointwise(xs, ys):
    a = InterruptState((("ISR_1", xs[0]), ("ISR_2", xs[1])))
    b = InterruptState((("ISR_1", ys[0]), ("ISR_2", ys[1])))
    j = a.join(b)
    assert j["ISR_1"] is xs[0].join(ys[0]) and j["ISR_2"] is xs[1].join(ys[1])


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
def test_simulator_enable_sets_refine_static_state(path):
    m = parse_program(path.read_text())
    fa = analyze_flow(m)
    cache = {}
    for t in enumerate_traces(m):
        for s in t.steps:
            key = (s.task, s.line)
            if key not in cache:
                cache[key] = fa.state_at(s.task, s.line, interference=True)
            state = cache[key]
            assert state is not None, key
            for isr, status in state.states:
                assert status.admits(isr in s.enabled), (key, isr, status, s.enabled)
