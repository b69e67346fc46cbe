import json
import shutil

import pytest
from hypothesis import given, settings, strategies as st

from irqav.agents.reports import DefectReport, OpRef, ReportedViolation
from irqav.errors import MalformedReply
from irqav.harness import GroundTruth, Score, ScoreCard, match, oracle_truth, run_benchmark, truth_path, write_truth
from irqav.model import parse_program

from conftest import CORPUS, corpus_files


def rv(var, pattern, l1, l2, l3):
    return ReportedViolation(var, pattern, OpRef(l1, pattern[0]), OpRef(l2, pattern[1]), OpRef(l3, pattern[2]))


def copy_corpus(dst, stems=None):
    dst.mkdir()
    for p in corpus_files():
        if stems is None or p.stem in stems:
            shutil.copy(p, dst / p.name)
            shutil.copy(truth_path(p), dst / truth_path(p).name)
    return dst


# -- matching ------------------------------------------------------------------------


def test_exact_match():
    truth = [rv("x", "RWR", 4, 9, 5), rv("x", "RWW", 4, 9, 6)]
    m = match(list(reversed(truth)), truth)
    assert (m.tp, m.fp, m.fn) == (2, 0, 0)


def test_missing_reports_are_false_negatives():
    truth = [rv("x", "RWR", 4, 9, 5), rv("y", "WWR", 2, 8, 3), rv("z", "WRW", 1, 7, 2)]
    m = match(truth[:1], truth)
    assert (m.tp, m.fp, m.fn) == (1, 0, 2)


def test_off_by_one_line_is_fp_and_fn():
    m = match([rv("x", "RWR", 4, 9, 6)], [rv("x", "RWR", 4, 9, 5)])
    assert (m.tp, m.fp, m.fn) == (0, 1, 1)
    assert m.diff()["false_positives"][0]["a3"]["line"] == 6
    assert m.diff()["false_negatives"][0]["a3"]["line"] == 5


def test_variable_and_pattern_are_part_of_key():
    assert match([rv("y", "RWR", 4, 9, 5)], [rv("x", "RWR", 4, 9, 5)]).tp == 0


def test_duplicates_match_one_to_one():
    v = rv("x", "RWR", 4, 9, 5)
    m = match([v, v], [v])
    assert (m.tp, m.fp, m.fn) == (1, 1, 0)
    m = match(DefectReport.of([v, v]), GroundTruth("p", (v,)))
    assert (m.tp, m.fp, m.fn) == (1, 0, 0)


violations = st.builds(
    rv,
    st.sampled_from(["a", "b"]),
    st.sampled_from(["RWR", "WWR", "RWW", "WRW"]),
    st.integers(1, 4),
    st.integers(5, 7),
    st.integers(1, 4),
)


@settings(max_examples=200, deadline=None)
@given(st.lists(violations, max_size=10), st.lists(violations, max_size=10), st.randoms())
def test_match_conservation_and_order(report, truth, rnd):
    m = match(report, truth)
    assert m.tp + m.fp == len(report)
    assert m.tp + m.fn == len(truth)
    shuffled_r, shuffled_t = report[:], truth[:]
    rnd.shuffle(shuffled_r)
    rnd.shuffle(shuffled_t)
    m2 = match(shuffled_r, shuffled_t)
    assert (m2.tp, m2.fp, m2.fn) == (m.tp, m.fp, m.fn)
    assert m2.diff() == m.diff()


@settings(max_examples=200)
@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_metric_identities(tp, fp, fn):
    s = Score("p", tp, fp, fn)
    if tp + fp:
        assert abs(s.precision - tp / (tp + fp)) < 1e-9
    else:
        assert s.precision is None and "precision" in s.undefined
    if tp + fn:
        assert abs(s.recall - tp / (tp + fn)) < 1e-9
    else:
        assert s.recall is None
    if s.f1 is not None:
        assert abs(s.f1 - 2 * tp / (2 * tp + fp + fn)) < 1e-9
        assert min(s.precision, s.recall) - 1e-9 <= s.f1 <= max(s.precision, s.recall) + 1e-9


def test_total_pools_counts_and_skips_failures():
    card = ScoreCard([Score("a", 2, 1, 0), Score("b", 1, 0, 3), Score("c", 9, 9, 9, error="boom")])
    t = card.total
    assert (t.tp, t.fp, t.fn) == (3, 1, 3)
    assert abs(t.precision - 0.75) < 1e-9 and abs(t.recall - 0.5) < 1e-9


# -- ground truth --------------------------------------------------------------------


def test_truth_round_trip():
    g = GroundTruth("p", (rv("x", "RWR", 4, 9, 5),))
    assert GroundTruth.from_json(json.loads(g.dumps())) == g


def test_truth_validation():
    bad = {"violations": [{"var": "x", "pattern": "RWR", "a1": {"line": 1, "op": "R"}, "a2": {"line": 2, "op": "R"}, "a3": {"line": 3, "op": "R"}}]}
    with pytest.raises(MalformedReply):
        GroundTruth.from_json(bad)
    far = GroundTruth("p", (rv("x", "RWR", 4, 900, 5),)).to_json()
    with pytest.raises(MalformedReply):
        GroundTruth.from_json(far, parse_program("int x;\nint main(){\n x = 1;\n}"))


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
def test_frozen_truth_matches_simulator(path):
    frozen = truth_path(path).read_text()
    assert oracle_truth(parse_program(path.read_text()), name=path.stem).dumps() == frozen


def test_write_truth_is_idempotent(tmp_path):
    d = copy_corpus(tmp_path / "c", {"02_rwr_check_use", "05_compound_counter"})
    before = {p.name: p.read_text() for p in d.glob("*.truth.json")}
    written = write_truth(d)
    assert len(written) == 2
    assert {p.name: p.read_text() for p in d.glob("*.truth.json")} == before


# -- benchmark runs ------------------------------------------------------------------


def test_benchmark_is_perfect_and_reproducible(tmp_path):
    cards = []
    for i in range(2):
        out = tmp_path / f"run{i}"
        card, reports = run_benchmark(CORPUS, out=out)
        cards.append({p.relative_to(out).as_posix(): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()})
        t = card.total
        expected = sum(len(GroundTruth.load(truth_path(p)).violations) for p in corpus_files())
        assert (t.tp, t.fp, t.fn) == (expected, 0, 0)
        assert all(p.error is None for p in card.programs)
        assert len(card.programs) == len(corpus_files())
    assert cards[0] == cards[1]
    assert "scorecard.txt" in cards[0] and "01_devval/report.json" in cards[0]
    assert "01_devval/transcripts/pattern_RWW.json" in cards[0]


def test_corrupted_truth_shows_in_diff(tmp_path):
    d = copy_corpus(tmp_path / "c", {"02_rwr_check_use"})
    tp = d / "02_rwr_check_use.truth.json"
    data = json.loads(tp.read_text())
    data["violations"][0]["a3"]["line"] += 1
    tp.write_text(json.dumps(data))
    card, reports = run_benchmark(d)
    (s,) = card.programs
    assert (s.fp, s.fn) == (1, 1)
    diff = reports["02_rwr_check_use"]["diff"]
    assert len(diff["false_positives"]) == 1 and len(diff["false_negatives"]) == 1


def test_no_violation_corpus_flags_undefined(tmp_path):
    d = copy_corpus(tmp_path / "c", {"14_never_enabled"})
    card, _ = run_benchmark(d)
    (s,) = card.programs
    assert (s.tp, s.fp, s.fn) == (0, 0, 0)
    assert s.undefined == ["precision", "recall", "f1"]
    table = card.table()
    assert "14_never_enabled: undefined precision, recall, f1" in table
    assert "n/a" in table


def test_program_failure_is_recorded(tmp_path):
    d = copy_corpus(tmp_path / "c", {"02_rwr_check_use"})
    (d / "00_broken.c").write_text("int main( {\n")
    (d / "03_no_truth.c").write_text("int x;\nint main(){\n x = 1;\n}\n")
    card, reports = run_benchmark(d, out=tmp_path / "out")
    by = {s.name: s for s in card.programs}
    assert by["00_broken"].error and by["03_no_truth"].error.startswith("FileNotFoundError")
    assert by["02_rwr_check_use"].error is None and by["02_rwr_check_use"].tp == 1
    assert card.total.tp == 1
    assert "00_broken: failed:" in (tmp_path / "out" / "scorecard.txt").read_text()
    assert json.loads((tmp_path / "out" / "00_broken" / "report.json").read_text())["error"]


def test_oracle_truth_flag_skips_files(tmp_path):
    d = tmp_path / "c"
    d.mkdir()
    shutil.copy(CORPUS / "02_rwr_check_use.c", d)
    card, _ = run_benchmark(d, use_oracle_truth=True)
    assert card.total.tp == 1 and card.total.fn == 0


def test_timing_column_optional():
    card = ScoreCard([Score("a", 1, 0, 0, seconds=0.5)])
    assert "Time(s)" not in card.table() and "seconds" not in card.dumps()
    assert "Time(s)" in card.table(True) and "0.50" in card.table(True)
