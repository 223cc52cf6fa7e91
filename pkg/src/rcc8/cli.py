"""Command-line entry point.

    rcc8 algebra compose R1 R2 | converse R | neighbors R
    rcc8 network solve FILE
    rcc8 oracle soundness --samples N --grid WxH --seed S [--table PATH]
    rcc8 oracle witnesses [--budget N] [--grid WxH] [--seed S]
    rcc8 eval run --experiment K [--anonymize] --endpoint URL --model NAME --out FILE
    rcc8 eval score --experiment K --transcript FILE --out DIR
    rcc8 eval report --transcript FILE [--format markdown|csv]

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
Set ``RCC8_CI=1`` to make ``--seed`` mandatory for randomized commands.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

from . import algebra, harness, network, neighborhood, oracle, scoring
from .algebra import RCC8Error

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
CI_ENV = "RCC8_CI"


class UsageError(Exception):
    pass


def _grid(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        bounds = int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 6x6, got {text!r}")
    if min(bounds) < 1:
        raise argparse.ArgumentTypeError("grid dimensions must be positive")
    return bounds


def _relation(text: str) -> algebra.BaseRelation:
    try:
        return algebra.parse_relation(text)
    except algebra.UnknownRelation as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _seed(args) -> int:
    if args.seed is None:
        if os.environ.get(CI_ENV):
            raise UsageError(f"--seed is required when {CI_ENV} is set")
        return 42
    return args.seed


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rcc8", description="RCC-8 calculus toolkit")
    sub = p.add_subparsers(dest="group", required=True)

    alg = sub.add_parser("algebra", help="relation algebra queries")
    alg.add_argument("--table", help="composition table JSON")
    alg.add_argument("--graph", help="CN graph JSON")
    asub = alg.add_subparsers(dest="cmd", required=True)
    c = asub.add_parser("compose")
    c.add_argument("r1", type=_relation)
    c.add_argument("r2", type=_relation)
    c = asub.add_parser("converse")
    c.add_argument("r", type=_relation)
    c = asub.add_parser("neighbors")
    c.add_argument("r", type=_relation)

    net = sub.add_parser("network", help="constraint networks")
    net.add_argument("--table", help="composition table JSON")
    nsub = net.add_subparsers(dest="cmd", required=True)
    c = nsub.add_parser("solve", help="algebraic closure of a network document")
    c.add_argument("file")
    c.add_argument("--scenario", action="store_true", help="also search for a scenario")

    orc = sub.add_parser("oracle", help="grid-region model checks")
    osub = orc.add_subparsers(dest="cmd", required=True)
    c = osub.add_parser("soundness")
    c.add_argument("--samples", type=int, default=oracle.DEFAULT_SOUNDNESS_SAMPLES)
    c.add_argument("--grid", type=_grid, default=oracle.DEFAULT_GRID)
    c.add_argument("--seed", type=int)
    c.add_argument("--table")
    c = osub.add_parser("witnesses")
    c.add_argument("--budget", type=int, default=oracle.DEFAULT_WITNESS_BUDGET)
    c.add_argument("--grid", type=_grid, default=oracle.DEFAULT_GRID)
    c.add_argument("--seed", type=int)
    c.add_argument("--table")

    ev = sub.add_parser("eval", help="LLM experiments")
    esub = ev.add_subparsers(dest="cmd", required=True)
    kinds = [k.value for k in harness.ExperimentKind]
    c = esub.add_parser("run")
    c.add_argument("--experiment", choices=kinds, required=True)
    c.add_argument("--anonymize", action="store_true")
    c.add_argument("--endpoint", required=True, help="base URL of the chat-completions API")
    c.add_argument("--model", required=True)
    c.add_argument("--temperature", type=float, default=0.0)
    c.add_argument("--out", required=True)
    c.add_argument("--credential-env", default="OPENAI_API_KEY")
    c.add_argument("--path", default="/v1/chat/completions")
    c.add_argument("--delay", type=float, default=1.0, help="minimum seconds between requests")
    c.add_argument("--retries", type=int, default=3)
    c.add_argument("--timeout", type=float, default=60.0)
    for name in ("score", "report"):
        c = esub.add_parser(name)
        c.add_argument("--experiment", choices=kinds)
        c.add_argument("--transcript", required=True)
        c.add_argument("--human-prefs")
        c.add_argument("--corrections")
        c.add_argument("--table")
        c.add_argument("--graph")
        if name == "score":
            c.add_argument("--out", required=True)
        else:
            c.add_argument("--format", choices=["markdown", "csv"], default="markdown")
    return p


def _cmd_algebra(args, out) -> int:
    if args.cmd == "compose":
        t = algebra.load_composition_table(args.table)
        print(" ".join(algebra.compose(args.r1, args.r2, t).names()), file=out)
    elif args.cmd == "converse":
        print(algebra.converse(args.r).name, file=out)
    else:
        g = neighborhood.load_cn_graph(args.graph)
        print(" ".join(neighborhood.neighbors(args.r, g).names()), file=out)
    return EXIT_OK


def _cmd_network(args, out) -> int:
    t = algebra.load_composition_table(args.table)
    try:
        net = network.load_network(args.file)
    except network.EmptyConstraint:
        print("INCONSISTENT", file=out)
        return EXIT_FAIL
    closed = network.algebraic_closure(net, t)
    if closed is None:
        print("INCONSISTENT", file=out)
        return EXIT_FAIL
    print(closed.render(), file=out)
    if args.scenario:
        sc = network.refine_to_scenario(closed, t)
        if sc is None:
            print("INCONSISTENT", file=out)
            return EXIT_FAIL
        for (x, y), r in sc.items():
            print(f"{r.name}({x},{y})", file=out)
    return EXIT_OK


def _cmd_oracle(args, out) -> int:
    t = algebra.load_composition_table(args.table)
    seed = _seed(args)
    if args.cmd == "soundness":
        bad = oracle.soundness_sample(t, args.samples, args.grid, seed)
        for w in bad:
            print(json.dumps(w.to_json()), file=out)
        print(f"# {len(bad)} violations in {args.samples} samples "
              f"({args.grid[0]}x{args.grid[1]}, seed {seed})", file=sys.stderr)
        return EXIT_OK if not bad else EXIT_FAIL
    cov = oracle.witness_coverage(t, args.budget, args.grid, seed)
    for e in cov.entries:
        a, b, c = (r.name for r in e.triple)
        print(f"{a}|{b} -> {c}: {e.config}", file=out)
    print(f"coverage {cov.found}/{cov.total}", file=out)
    for e in cov.non_default():
        print(f"non-default: {'|'.join(r.name for r in e.triple[:2])} -> "
              f"{e.triple[2].name} ({e.config})", file=out)
    return EXIT_OK if cov.complete else EXIT_FAIL


def _load_scored(args):
    records = harness.read_transcript(args.transcript)
    spec = harness.check_transcript(records)
    if args.experiment and args.experiment != spec.kind.value:
        raise UsageError(f"transcript is a {spec.kind.value} run, not {args.experiment}")
    t = algebra.load_composition_table(args.table)
    g = neighborhood.load_cn_graph(args.graph)
    humans = scoring.load_human_preferences(args.human_prefs) if args.human_prefs else None
    corrections = scoring.load_corrections(args.corrections) if args.corrections else None
    return scoring.score_transcript(records, t, g, humans, corrections)


def _cmd_eval(args, out) -> int:
    if args.cmd == "run":
        cfg = harness.EndpointConfig(
            base_url=args.endpoint, model=args.model, temperature=args.temperature,
            timeout=args.timeout, retries=args.retries, credential_env=args.credential_env,
            path=args.path, min_interval=args.delay)
        spec = harness.ExperimentSpec(harness.ExperimentKind(args.experiment), args.anonymize)
        path = Path(args.out)
        if path.exists() and path.stat().st_size:
            raise UsageError(f"{path} already exists; refusing to append to another run")
        try:
            summary = harness.run_experiment(spec, harness.ChatEndpoint(cfg),
                                             harness.TranscriptStore(path))
        except harness.EndpointError as exc:
            done = exc.summary.exchanges if exc.summary else 0
            print(f"aborted at sequence {done}: {exc}", file=sys.stderr)
            return EXIT_FAIL
        print(f"{summary.exchanges} exchanges written to {path}", file=out)
        return EXIT_OK
    score = _load_scored(args)
    if args.cmd == "report":
        out.write(scoring.render_report(score, args.format))
        return EXIT_OK
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.md").write_text(scoring.render_report(score, "markdown"), encoding="utf-8")
    (outdir / "verdicts.csv").write_text(scoring.render_report(score, "csv"), encoding="utf-8")
    print(scoring.dump_summary(score), file=out)
    return EXIT_OK


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {"algebra": _cmd_algebra, "network": _cmd_network,
                "oracle": _cmd_oracle, "eval": _cmd_eval}
    try:
        return handlers[args.group](args, out)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"rcc8: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RCC8Error, ValueError, OSError, KeyError) as exc:
        print(f"rcc8: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
