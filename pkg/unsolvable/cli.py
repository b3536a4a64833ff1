#!/usr/bin/env python3
"""
Command-line interface for unsolvable.

Generates, verifies and summarizes datasets, grades response files, runs the
calibration simulator, and drives the reverse-construction pipeline.
"""

import argparse
import json
import logging
import sys
from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Optional

from . import __version__, dataset
from .calibration import PRESETS, TauMode, preset, simulate, summarize
from .config import ProjectConfig
from .hamiltonian import Strategy as HamStrategy
from .model import DatasetRecord, Domain, Split, Tier, UnsolvableError
from .prompts import PromptBook
from .reverse import SeedProblem, run_many
from .rewards import DEFAULT_GROUP_SIZE, GroupGrade, grade_group, summarize_grades

logger = logging.getLogger(__name__)

PUZZLE_DOMAINS = [d.value for d in Domain if d is not Domain.MATH]


def _configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr, force=True)


def _read_jsonl(path: Path) -> List[dict]:
    rows = []
    try:
        with open(path, "r", encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    rows.append(json.loads(line))
                except json.JSONDecodeError as e:
                    raise dataset.SchemaError(line_no, str(e))
    except OSError as e:
        raise dataset.DatasetIOError(f"cannot read {path}: {e}")
    return rows


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------

def cmd_gen(args, config: ProjectConfig) -> int:
    split = Split(args.split)
    prompts = PromptBook.from_file(config.templates_path)
    workers = args.workers or config.workers
    if args.table1:
        records = dataset.generate_table(split, args.seed, workers=workers, prompts=prompts)
        out = Path(args.out or f"table1-{split.value}.jsonl")
    else:
        records = dataset.generate_records(
            Domain(args.domain), args.solvable, args.unsolvable, args.seed,
            split=split, tier=Tier(args.difficulty), size=args.size,
            strategy=args.strategy, max_attempts=config.max_attempts,
            workers=workers, prompts=prompts,
        )
        out = Path(args.out or f"{args.domain}-{split.value}.jsonl")
    digest = dict(config.digest_source(), seed=args.seed, split=split.value,
                  domain=args.domain, table1=args.table1)
    dataset.write_records(records, out, digest)
    print(f"Wrote {len(records)} records to {out}")
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args, config: ProjectConfig) -> int:
    failed = False
    for path in args.files:
        path = Path(path)
        records = dataset.read_records(path)
        manifest = dataset.read_manifest(path)
        if manifest is not None and not manifest.matches(records):
            print(f"{path}: manifest counts do not match the records", file=sys.stderr)
            failed = True
        mismatches = dataset.verify_records(records)
        for m in mismatches:
            detail = f" ({m.detail})" if m.detail else ""
            print(f"{path}: {m.id}: stored {m.stored}, certified {m.certified}{detail}")
        if mismatches:
            failed = True
        print(f"{path}: {len(records)} records, {len(mismatches)} mismatch(es)")
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# grade
# ---------------------------------------------------------------------------

def _response_groups(rows: List[dict], group_size: int) -> List[tuple]:
    """Lines carry either a `responses` list (one group) or a single `response`."""
    groups = []
    singles: Dict[str, List[str]] = defaultdict(list)
    steps: Dict[str, int] = {}
    for row in rows:
        if "id" not in row:
            raise UnsolvableError("response line without an id")
        if "responses" in row:
            groups.append((row["id"], list(row["responses"]), row.get("step")))
        else:
            singles[row["id"]].append(str(row.get("response", "")))
            steps.setdefault(row["id"], row.get("step"))
    for instance_id, texts in singles.items():
        for start in range(0, len(texts), group_size):
            groups.append((instance_id, texts[start:start + group_size], steps[instance_id]))
    return groups


def _grade_row(grade: GroupGrade) -> dict:
    return {
        "id": grade.instance.id,
        "beta": grade.beta,
        "tau": grade.tau,
        "breakdowns": [
            {"kind": g.response.kind.value, "correct": g.correct, "r_acc": g.breakdown.r_acc,
             "r_detect": g.breakdown.r_detect, "r_cal": g.breakdown.r_cal,
             "total": g.breakdown.total}
            for g in grade.graded
        ],
    }


def _print_summary(report: Dict[str, Dict[str, float]]) -> None:
    columns = ("S", "U", "M", "Corr", "Rej", "C+R", "mean_reward")
    print(f"{'Domain':<12}{'N':>6}" + "".join(f"{c:>12}" for c in columns))
    print("-" * (18 + 12 * len(columns)))
    for name, metrics in report.items():
        cells = "".join(f"{metrics[c]:>12.4f}" for c in columns)
        print(f"{name:<12}{int(metrics['responses']):>6}{cells}")


def cmd_grade(args, config: ProjectConfig) -> int:
    instances = {r.instance.id: r.instance for r in dataset.read_records(Path(args.instances))}
    reward = config.reward
    grades = []
    for instance_id, texts, step in _response_groups(_read_jsonl(Path(args.responses)), args.group_size):
        if instance_id not in instances:
            raise UnsolvableError(f"no instance with id {instance_id} in {args.instances}")
        grades.append(grade_group(instances[instance_id], texts, reward,
                                  args.step if step is None else int(step)))
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as f:
                for grade in grades:
                    f.write(json.dumps(_grade_row(grade)) + "\n")
        except OSError as e:
            raise dataset.DatasetIOError(f"cannot write {args.out}: {e}")
    _print_summary(summarize_grades(grades))
    return 0


# ---------------------------------------------------------------------------
# stats
# ---------------------------------------------------------------------------

def cmd_stats(args, config: ProjectConfig) -> int:
    records: List[DatasetRecord] = []
    for path in args.files:
        records.extend(dataset.read_records(Path(path)))
    print(dataset.stats(records).render())
    return 0


# ---------------------------------------------------------------------------
# sim
# ---------------------------------------------------------------------------

def cmd_sim(args, config: ProjectConfig) -> int:
    overrides = {"seed": args.seed}
    if args.steps is not None:
        overrides["steps"] = args.steps
    if args.group_size is not None:
        overrides["group_size"] = args.group_size
    if args.tau_mode:
        overrides["tau_mode"] = TauMode(args.tau_mode)
    sim_config = preset(args.preset, **overrides)
    trace = simulate(sim_config)
    if args.csv:
        trace.write_csv(Path(args.csv))
        logger.info("trace written to %s", args.csv)
    if len(trace) == 0:
        print("No steps simulated")
        return 0
    print(f"{'Series':<20}{'final':>10}{'mean':>10}{'last':>10}")
    for name, s in summarize(trace).items():
        print(f"{name:<20}{s.final:>10.4f}{s.area:>10.4f}{s.last:>10.4f}")
    return 0


# ---------------------------------------------------------------------------
# revgen
# ---------------------------------------------------------------------------

def _seed_from_row(row: dict) -> SeedProblem:
    return SeedProblem(
        statement=str(row.get("statement", "")),
        reference_rationale=str(row.get("rationale", row.get("reference_rationale", ""))),
        reference_answer=str(row.get("answer", row.get("reference_answer", ""))),
    )


def cmd_revgen(args, config: ProjectConfig) -> int:
    seeds = [_seed_from_row(row) for row in _read_jsonl(Path(args.seeds))]
    config.make_oracle()  # fail fast on a missing endpoint or model
    results = run_many(
        seeds, config.make_oracle,
        max_in_flight=args.max_in_flight or config.max_in_flight,
        validate=args.validate,
        tier1_samples=args.tier1_samples or config.tier1_samples,
        markers=config.reward.markers,
    )
    split = Split(args.split)
    prompts = PromptBook.from_file(config.templates_path)
    records = [DatasetRecord(inst.with_prompt(prompts.render(inst, split)), split)
               for inst in results if inst is not None]
    dataset.write_records(records, Path(args.out), config.digest_source())
    print(f"{len(records)} of {len(seeds)} seed(s) produced confirmed unsolvable problems")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unsolvable",
        description="Generate and grade solvable/unsolvable reasoning instances",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # 5 solvable and 5 unsolvable Game24 puzzles, then re-certify them
  unsolvable gen --domain game24 --solvable 5 --unsolvable 5 --seed 42
  unsolvable verify game24-train.jsonl

  # Whole test split at the reference counts, four workers
  unsolvable gen --table1 --split test --seed 7 --workers 4
  unsolvable stats table1-test.jsonl

  # Grade responses (JSONL with id + responses) against a dataset
  unsolvable grade --instances game24-train.jsonl --responses out.jsonl

  # Refusal dynamics without unsolvable training data
  unsolvable sim --preset no-unsdata --csv trace.csv
        """,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="Only warnings and errors")
    parser.add_argument("--config", type=str, metavar="PATH",
                        help="Config file (default: ./.unsolvable)")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    gen = sub.add_parser("gen", help="Generate a puzzle dataset")
    gen.add_argument("--domain", choices=PUZZLE_DOMAINS)
    gen.add_argument("--solvable", type=int, default=0, metavar="N")
    gen.add_argument("--unsolvable", type=int, default=0, metavar="N")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--difficulty", choices=[t.value for t in Tier], default=Tier.EASY.value)
    gen.add_argument("--size", type=int, help="k, n or maze side; overrides the tier default")
    gen.add_argument("--strategy", choices=[s.value for s in HamStrategy],
                     help="Hamiltonian unsolvable strategy (random when omitted)")
    gen.add_argument("--split", choices=[s.value for s in Split], default=Split.TRAIN.value)
    gen.add_argument("--table1", action="store_true",
                     help="Generate every puzzle row of the split at the reference counts")
    gen.add_argument("--out", type=str, metavar="FILE")
    gen.add_argument("--workers", type=int, metavar="N")
    gen.set_defaults(handler=cmd_gen)

    verify = sub.add_parser("verify", help="Re-certify labels and witnesses in dataset files")
    verify.add_argument("files", nargs="+", metavar="FILE")
    verify.set_defaults(handler=cmd_verify)

    grade = sub.add_parser("grade", help="Grade response groups against a dataset")
    grade.add_argument("--instances", required=True, metavar="FILE")
    grade.add_argument("--responses", required=True, metavar="FILE")
    grade.add_argument("--step", type=int, default=0, help="Training step for the tau schedule")
    grade.add_argument("--group-size", type=int, default=DEFAULT_GROUP_SIZE)
    grade.add_argument("--out", metavar="FILE", help="Write per-group breakdowns as JSONL")
    grade.set_defaults(handler=cmd_grade)

    stats_cmd = sub.add_parser("stats", help="Count records per split, domain and label")
    stats_cmd.add_argument("files", nargs="+", metavar="FILE")
    stats_cmd.set_defaults(handler=cmd_stats)

    sim = sub.add_parser("sim", help="Run the refusal-calibration simulator")
    sim.add_argument("--preset", choices=PRESETS, default="full")
    sim.add_argument("--tau-mode", choices=[m.value for m in TauMode])
    sim.add_argument("--steps", type=int)
    sim.add_argument("--group-size", type=int)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--csv", metavar="FILE", help="Write the per-step trace")
    sim.set_defaults(handler=cmd_sim)

    revgen = sub.add_parser("revgen", help="Build unsolvable math problems from seed problems")
    revgen.add_argument("--seeds", required=True, metavar="FILE",
                        help="JSONL with statement, rationale, answer")
    revgen.add_argument("--out", required=True, metavar="FILE")
    revgen.add_argument("--split", choices=[s.value for s in Split], default=Split.TRAIN.value)
    revgen.add_argument("--validate", action="store_true",
                        help="Drop seeds the oracle cannot solve first")
    revgen.add_argument("--tier1-samples", type=int)
    revgen.add_argument("--max-in-flight", type=int)
    revgen.set_defaults(handler=cmd_revgen)
    return parser


def cli(argv: Optional[List[str]] = None) -> int:
    """Run one command; returns 0 on success, 1 on validation failure, 2 on usage errors."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "gen" and not args.table1:
            if not args.domain:
                parser.error("gen: --domain is required unless --table1 is given")
            if args.solvable < 0 or args.unsolvable < 0:
                parser.error("gen: counts must be non-negative")
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    _configure_logging(args.verbose, args.quiet)
    config = ProjectConfig(Path.cwd(), Path(args.config) if args.config else None)
    try:
        return args.handler(args, config)
    except UnsolvableError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1


def main():
    """Main entry point for the unsolvable command."""
    sys.exit(cli())


if __name__ == "__main__":
    main()
