"""Benchmark runner: run the pipeline over a corpus and score it against ground truth."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .agents.backends import ChatBackend, OracleBackend
from .agents.reports import DefectReport, OpRef, ReportedViolation
from .config import AnalysisConfig
from .errors import IrqavError, MalformedReply
from .highlighter import PATTERNS
from .model import ProgramModel, parse_program
from .pipeline import analyze_model
from .simulator import simulate

TRUTH_SUFFIX = ".truth.json"


# -- ground truth --------------------------------------------------------------------


@dataclass(frozen=True)
class GroundTruth:
    program: str
    violations: tuple[ReportedViolation, ...]

    def to_json(self) -> dict:
        return {"program": self.program, "violations": [v.to_json(rationale=False) for v in self.violations]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, data: dict, model: ProgramModel | None = None) -> "GroundTruth":
        out = []
        for i, d in enumerate(data.get("violations", [])):
            refs = []
            for k in ("a1", "a2", "a3"):
                r = d[k]
                refs.append(OpRef(int(r["line"]), str(r["op"]), str(r.get("function", ""))))
            pattern = d["pattern"]
            if pattern not in PATTERNS or "".join(r.op for r in refs) != pattern:
                raise MalformedReply(f"truth entry {i}: ops do not match pattern {pattern}")
            if model is not None and not all(1 <= r.line <= model.line_count for r in refs):
                raise MalformedReply(f"truth entry {i}: line outside the program")
            out.append(ReportedViolation(d["var"], pattern, *refs))
        return cls(data.get("program", ""), tuple(out))

    @classmethod
    def load(cls, path: str | Path, model: ProgramModel | None = None) -> "GroundTruth":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")), model)


def oracle_truth(model: ProgramModel, config: AnalysisConfig | None = None, name: str = "") -> GroundTruth:
    """Truth as the set of violations the simulator witnesses with enable flags honoured."""
    config = config or AnalysisConfig()
    res = simulate(model, config.sim, True, config)
    seen: dict[tuple, ReportedViolation] = {}
    for v in res.violations:
        rv = ReportedViolation.from_dynamic(v)
        seen.setdefault(rv.key, rv)
    return GroundTruth(name, tuple(sorted(seen.values(), key=lambda v: v.key)))


# -- matching ------------------------------------------------------------------------


@dataclass
class MatchResult:
    pairs: list[tuple[ReportedViolation, ReportedViolation]] = field(default_factory=list)
    false_positives: list[ReportedViolation] = field(default_factory=list)
    false_negatives: list[ReportedViolation] = field(default_factory=list)

    @property
    def tp(self) -> int:
        return len(self.pairs)

    @property
    def fp(self) -> int:
        return len(self.false_positives)

    @property
    def fn(self) -> int:
        return len(self.false_negatives)

    def diff(self) -> dict:
        return {
            "false_positives": [v.to_json(rationale=False) for v in self.false_positives],
            "false_negatives": [v.to_json(rationale=False) for v in self.false_negatives],
        }


def match(report: Iterable[ReportedViolation] | DefectReport, truth: Iterable[ReportedViolation] | GroundTruth) -> MatchResult:
    """One-to-one matching on (var, pattern, three (line, op) pairs)."""
    reported = list(report.violations if isinstance(report, DefectReport) else report)
    expected = list(truth.violations if isinstance(truth, GroundTruth) else truth)
    pool: dict[tuple, list[ReportedViolation]] = {}
    for t in sorted(expected, key=lambda v: v.key):
        pool.setdefault(t.key, []).append(t)
    res = MatchResult()
    for r in sorted(reported, key=lambda v: v.key):
        bucket = pool.get(r.key)
        if bucket:
            res.pairs.append((r, bucket.pop(0)))
        else:
            res.false_positives.append(r)
    for k in sorted(pool):
        res.false_negatives.extend(pool[k])
    return res


# -- scores --------------------------------------------------------------------------


def _ratio(a: int, b: int) -> float | None:
    return a / b if b else None


@dataclass
class Score:
    name: str
    tp: int = 0
    fp: int = 0
    fn: int = 0
    seconds: float = 0.0
    error: str | None = None
    incomplete: bool = False

    @property
    def precision(self) -> float | None:
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> float | None:
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def f1(self) -> float | None:
        p, r = self.precision, self.recall
        if p is None or r is None or p + r == 0:
            return None
        return 2 * p * r / (p + r)

    @property
    def undefined(self) -> list[str]:
        return [m for m in ("precision", "recall", "f1") if getattr(self, m) is None]

    def to_json(self, timing: bool = False) -> dict:
        d = {
            "name": self.name,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "undefined": self.undefined,
            "error": self.error,
            "incomplete": self.incomplete,
        }
        if timing:
            d["seconds"] = round(self.seconds, 3)
        return d


@dataclass
class ScoreCard:
    programs: list[Score] = field(default_factory=list)

    @property
    def total(self) -> Score:
        """Pooled counts over every program that ran; failed programs are left out."""
        ok = [p for p in self.programs if p.error is None]
        return Score(
            "TOTAL",
            sum(p.tp for p in ok),
            sum(p.fp for p in ok),
            sum(p.fn for p in ok),
            sum(p.seconds for p in self.programs),
            None,
            any(p.incomplete for p in ok),
        )

    def to_json(self, timing: bool = False) -> dict:
        return {"programs": [p.to_json(timing) for p in self.programs], "total": self.total.to_json(timing)}

    def dumps(self, timing: bool = False) -> str:
        return json.dumps(self.to_json(timing), indent=2, sort_keys=True) + "\n"

    def table(self, timing: bool = False) -> str:
        head = ["Program", "TP", "FP", "FN", "Pre", "Rec", "F1"] + (["Time(s)"] if timing else [])
        rows = []
        for p in [*self.programs, self.total]:
            if p.error is not None:
                cells = [p.name, "", "", "", "", "", ""]
            else:
                cells = [p.name, str(p.tp), str(p.fp), str(p.fn), _pct(p.precision), _pct(p.recall), _pct(p.f1)]
            if timing:
                cells.append(f"{p.seconds:.2f}")
            rows.append(cells)
        widths = [max(len(r[i]) for r in [head, *rows]) for i in range(len(head))]

        def fmt(cells):
            return "  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(cells, widths))).rstrip()

        lines = [fmt(head), fmt(["-" * w for w in widths])]
        lines += [fmt(r) for r in rows[:-1]]
        lines += [fmt(["-" * w for w in widths]), fmt(rows[-1])]
        notes = [f"{p.name}: failed: {p.error}" for p in self.programs if p.error]
        notes += [f"{p.name}: undefined {', '.join(p.undefined)}" for p in self.programs if p.error is None and p.undefined]
        if notes:
            lines += [""] + notes
        return "\n".join(lines) + "\n"


def _pct(x: float | None) -> str:
    return "n/a" if x is None else f"{100 * x:.1f}%"


# -- runner --------------------------------------------------------------------------


def corpus_programs(corpus: str | Path) -> list[Path]:
    return sorted(Path(corpus).glob("*.c"))


def truth_path(src: Path) -> Path:
    return src.with_name(src.stem + TRUTH_SUFFIX)


def run_benchmark(
    corpus: str | Path,
    config: AnalysisConfig | None = None,
    expert: ChatBackend | None = None,
    judge: ChatBackend | None = None,
    out: str | Path | None = None,
    use_oracle_truth: bool = False,
    max_rounds: int | None = None,
    timing: bool = False,
) -> tuple[ScoreCard, dict[str, dict]]:
    """Score every ``*.c`` program of ``corpus``; failures are recorded, not raised."""
    config = config or AnalysisConfig()
    if expert is None or judge is None:
        oracle = OracleBackend(config)
        expert = expert or oracle
        judge = judge or oracle
    card = ScoreCard()
    reports: dict[str, dict] = {}
    outdir = Path(out) if out is not None else None
    for src in corpus_programs(corpus):
        name = src.stem
        t0 = time.perf_counter()
        score = Score(name)
        try:
            model = parse_program(src.read_text(encoding="utf-8"), config)
            if use_oracle_truth:
                truth = oracle_truth(model, config, name)
            else:
                truth = GroundTruth.load(truth_path(src), model)
            tdir = outdir / name / "transcripts" if outdir is not None else None
            result = analyze_model(model, config, expert, judge, max_rounds, tdir, name=name)
            report = result.report
            m = match(report, truth)
            score.tp, score.fp, score.fn = m.tp, m.fp, m.fn
            score.incomplete = report.incomplete
            reports[name] = {**result.to_json(), "truth": truth.to_json()["violations"], "diff": m.diff()}
        except (IrqavError, OSError, ValueError, KeyError) as e:
            score.error = f"{type(e).__name__}: {e}"
            reports[name] = {"program": name, "error": score.error}
        score.seconds = time.perf_counter() - t0
        card.programs.append(score)
        if outdir is not None:
            d = outdir / name
            d.mkdir(parents=True, exist_ok=True)
            (d / "report.json").write_text(json.dumps(reports[name], indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "scorecard.json").write_text(card.dumps(timing), encoding="utf-8")
        (outdir / "scorecard.txt").write_text(card.table(timing), encoding="utf-8")
    return card, reports


def write_truth(corpus: str | Path, config: AnalysisConfig | None = None) -> list[Path]:
    """(Re)generate ``<name>.truth.json`` next to every program from the simulator."""
    config = config or AnalysisConfig()
    written = []
    for src in corpus_programs(corpus):
        model = parse_program(src.read_text(encoding="utf-8"), config)
        p = truth_path(src)
        p.write_text(oracle_truth(model, config, src.stem).dumps(), encoding="utf-8")
        written.append(p)
    return written
