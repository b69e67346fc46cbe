import pytest

from irqav.access import analyze_accesses
from irqav.extractor import count_loc, extract, reachable_functions
from irqav.model import parse_program
from irqav.orchestrator import plan
from irqav.simulator import simulate

from conftest import CORPUS, corpus_files


def compress(src):
    m = parse_program(src)
    _, entry, cg = analyze_accesses(m)
    return m, extract(src, m, reachable_functions(entry, cg))


def test_devval_all_reachable_identity(devval, devval_src):
    _, entry, cg = analyze_accesses(devval)
    assert reachable_functions(entry, cg) == {"main", "ISR_1", "ISR_2", "ISR_3"}
    comp = extract(devval_src, devval, reachable_functions(entry, cg))
    assert comp.text == devval_src
    assert comp.line_map == {i: i for i in range(1, devval.line_count + 1)}
    assert not comp.compressed


def test_transitive_callees_kept_dead_dropped():
    src = (
        "int g;\nvoid h(){\n g = 1;\n}\nvoid f(){\n h();\n}\nvoid d(){\n g = 2;\n}\n"
        "int main(){\n f();\n}\nvoid ISR_1(){\n g = 3;\n}\n"
    )
    m = parse_program(src)
    _, entry, cg = analyze_accesses(m)
    assert reachable_functions(entry, cg) == {"main", "ISR_1", "f", "h"}
    comp = extract(src, m, reachable_functions(entry, cg))
    assert comp.elided == ("d",)
    assert "/* elided: d */" in comp.text
    assert not ({8, 9, 10} & set(comp.line_map.values()))


def test_no_call_edges_reach_is_entry_set():
    m = parse_program("int g;\nint main(){\n g = 1;\n}\nvoid ISR_4(){\n g = 2;\n}")
    _, entry, cg = analyze_accesses(m)
    assert reachable_functions(entry, cg) == set(entry)


def test_dead_code_fixture_drops_twenty_loc():
    src = (CORPUS / "13_dead_code.c").read_text()
    m, comp = compress(src)
    assert comp.elided == ("unused_a", "unused_b")
    assert count_loc(comp.text) == count_loc(src) - 20


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
def test_line_map_is_a_bijection_onto_kept_lines(path):
    src = path.read_text()
    _, comp = compress(src)
    orig_lines = src.split("\n")
    new_lines = comp.text.split("\n")
    assert len(set(comp.line_map.values())) == len(comp.line_map)
    for c, o in comp.line_map.items():
        assert new_lines[c - 1] == orig_lines[o - 1]
    assert comp.reverse_map == {o: c for c, o in comp.line_map.items()}


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
def test_reparse_preserves_accesses(path):
    src = path.read_text()
    m, comp = compress(src)
    orig, _, _ = analyze_accesses(m)
    new, _, _ = analyze_accesses(parse_program(comp.text))
    keep = comp.retained_functions
    want = sorted((e.function, e.line, e.op, str(e.var)) for e in orig.events if e.function in keep)
    got = sorted((e.function, comp.to_original(e.line), e.op, str(e.var)) for e in new.events)
    assert got == want


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
def test_extraction_is_idempotent(path):
    src = path.read_text()
    _, once = compress(src)
    _, twice = compress(once.text)
    assert twice.text == once.text
    assert twice.line_map == {i: i for i in range(1, len(once.text.split("\n")) + (0 if once.text.endswith("\n") else 1))}
    # composing the maps gives back the first one
    assert {c: once.line_map[o] for c, o in twice.line_map.items() if o in once.line_map} == once.line_map


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
def test_globals_survive(path):
    src = path.read_text()
    m, comp = compress(src)
    assert [g.name for g in parse_program(comp.text).globals] == [g.name for g in m.globals]


def detection_sets(src, line_of=lambda n: n):
    m = parse_program(src)
    analyses, _ = plan(m)

    def ref(e):
        return (line_of(e.line), e.op)

    cands = sorted((c.var.key, c.pattern, ref(c.a1), ref(c.a2), ref(c.a3)) for c in analyses.candidates)
    dyn = sorted((v.var.key, v.pattern, ref(v.a1), ref(v.a2), ref(v.a3)) for v in simulate(m).violations)
    return cands, dyn


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
def test_detection_unchanged_by_compression(path):
    src = path.read_text()
    _, comp = compress(src)
    assert detection_sets(comp.text, comp.to_original) == detection_sets(src)


def test_count_loc_ignores_blank_and_comment_lines():
    text = "int a;\n\n// note\n/* block\n still */\nint b; /* trailing */\n  /* one */\n"
    assert count_loc(text) == 2
