"""Command line entry point: ``irqav analyze|simulate|score|truth``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .agents.backends import HttpBackend, OracleBackend, ReplayBackend
from .config import AnalysisConfig, BackendConfig, load_config
from .errors import IrqavError, PromptOverBudget
from .extractor import extract, reachable_functions
from .flow import FlowAnalysis, dump_flow, find_control_points
from .harness import run_benchmark, write_truth
from .highlighter import dump_candidates
from .model import parse_program
from .orchestrator import dump_plan, prepare_tasks, plan
from .pipeline import analyze_model
from .simulator import simulate

log = logging.getLogger("irqav")


def _backend(args, config: AnalysisConfig):
    kind = args.backend or config.backend.kind
    if kind == "oracle":
        return OracleBackend(config)
    if kind == "replay":
        root = args.transcripts or config.backend.transcript_dir
        if not root:
            raise SystemExit("--backend replay needs --transcripts DIR")
        return ReplayBackend(root)
    bc = BackendConfig.from_env(kind="http", temperature=config.backend.temperature, timeout_s=config.backend.timeout_s)
    return HttpBackend(bc, record_dir=getattr(args, "record", None))


def _config(args) -> AnalysisConfig:
    config = load_config(args.config)
    if getattr(args, "max_rounds", None):
        config = dataclasses.replace(config, backend=dataclasses.replace(config.backend, max_rounds=args.max_rounds))
    return config


def cmd_analyze(args) -> int:
    config = _config(args)
    source = Path(args.file).read_text(encoding="utf-8")
    model = parse_program(source, config)
    dumps = [args.dump_accesses, args.dump_compressed, args.dump_irq_flow, args.dump_candidates, args.dump_plan]
    if any(dumps):
        analyses, summary = plan(model, config)
        if args.dump_accesses:
            sys.stdout.write(analyses.matrix.to_jsonl())
        if args.dump_compressed:
            comp = analyses.compressed or extract(source, model, reachable_functions(analyses.entry, analyses.callgraph))
            print(comp.dump())
        if args.dump_irq_flow:
            fa = analyses.flow or FlowAnalysis(model, analyses.matrix, config, analyses.graphs)
            print(dump_flow(fa, list(analyses.callgraph.externals)))
        if args.dump_candidates:
            print(dump_candidates(analyses.candidates))
        if args.dump_plan:
            print(dump_plan(summary, prepare_tasks(analyses, summary)))
        return 0
    backend = _backend(args, config)
    result = analyze_model(
        model,
        config,
        backend,
        backend,
        args.max_rounds,
        args.save_transcripts,
        workers=args.workers,
        name=Path(args.file).stem,
    )
    print(result.dumps())
    return 0


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    sim = config.sim
    overrides = {
        "max_firings_per_isr": args.max_firings,
        "max_loop_iterations": args.max_loop_iters,
        "max_traces": args.max_traces,
    }
    sim = dataclasses.replace(sim, **{k: v for k, v in overrides.items() if v is not None})
    config = dataclasses.replace(config, sim=sim)
    model = parse_program(Path(args.file).read_text(encoding="utf-8"), config)
    res = simulate(model, sim, not args.ignore_enable, config)
    data = {
        "traces": res.traces,
        "complete": res.complete,
        "truncated_loops": res.truncated,
        "violations": [v.to_json() | {"witness": v.witness} for v in res.violations],
    }
    print(json.dumps(data, indent=2, sort_keys=True))
    if not res.complete:
        log.warning("trace budget of %d exhausted; results are partial", sim.max_traces)
        return 3
    return 0


def cmd_score(args) -> int:
    config = _config(args)
    backend = _backend(args, config)
    card, _ = run_benchmark(
        args.corpus,
        config,
        backend,
        backend,
        args.out,
        use_oracle_truth=args.oracle_truth,
        max_rounds=args.max_rounds,
        timing=args.timing,
    )
    sys.stdout.write(card.table(args.timing))
    return 0


def cmd_truth(args) -> int:
    for p in write_truth(args.corpus, load_config(args.config)):
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="irqav", description="Atomicity-violation detection for interrupt-driven C programs.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def backend_opts(sp):
        sp.add_argument("--config", help="TOML or JSON configuration file")
        sp.add_argument("--backend", choices=["http", "replay", "oracle"], help="chat backend for both agents")
        sp.add_argument("--transcripts", help="replay directory (<task>/round<n>-<role>.txt)")
        sp.add_argument("--record", help="with --backend http, also save every reply here in replay layout")
        sp.add_argument("--max-rounds", type=int, help="Expert/Judge rounds per task")

    a = sub.add_parser("analyze", help="run the analyses and the agent loop on one program")
    a.add_argument("file")
    backend_opts(a)
    a.add_argument("--save-transcripts", metavar="DIR", help="write one conversation transcript per task")
    a.add_argument("--workers", type=int, default=1, help="detection tasks run concurrently")
    a.add_argument("--dump-accesses", action="store_true", help="print the access matrix as JSON lines and stop")
    a.add_argument("--dump-compressed", action="store_true", help="print the compressed source with its line map and stop")
    a.add_argument("--dump-irq-flow", action="store_true", help="print interrupt states per task and line and stop")
    a.add_argument("--dump-candidates", action="store_true", help="print candidate violations and stop")
    a.add_argument("--dump-plan", action="store_true", help="print the code summary and detection tasks and stop")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="enumerate interleavings and print witnessed violations")
    s.add_argument("file")
    s.add_argument("--config")
    s.add_argument("--max-firings", type=int)
    s.add_argument("--max-loop-iters", type=int)
    s.add_argument("--max-traces", type=int)
    s.add_argument("--ignore-enable", action="store_true", help="let ISRs fire regardless of enable state")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("score", help="run a corpus and score it against ground truth")
    c.add_argument("--corpus", required=True)
    c.add_argument("--out", required=True)
    c.add_argument("--oracle-truth", action="store_true", help="derive truth from the simulator instead of *.truth.json")
    c.add_argument("--timing", action="store_true", help="include wall time (makes output non-reproducible)")
    backend_opts(c)
    c.set_defaults(func=cmd_score)

    t = sub.add_parser("truth", help="regenerate <name>.truth.json files from the simulator")
    t.add_argument("--corpus", required=True)
    t.add_argument("--config")
    t.set_defaults(func=cmd_truth)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except PromptOverBudget as e:
        log.error("%s", e)
        return 4
    except (IrqavError, OSError, ValueError) as e:
        log.error("%s", e)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
