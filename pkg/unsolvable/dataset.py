"""
Dataset files: JSON Lines records with a manifest sidecar, count tables,
and batch generation across workers.
"""

import hashlib
import json
import logging
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple

from . import __version__, domains
from .model import (
    DatasetRecord, Domain, Label, PuzzleInstance, Split, Tier, UnsolvableError,
)
from .prompts import PromptBook
from .rng import SeededRng

logger = logging.getLogger(__name__)

MANIFEST_SUFFIX = ".manifest.json"


class SchemaError(UnsolvableError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DatasetIOError(UnsolvableError):
    pass


DISPLAY_NAMES = {
    Domain.GAME24: "Game24",
    Domain.HAM_CYCLE: "Hamiltonian Cycle",
    Domain.HAM_PATH: "Hamiltonian Path",
    Domain.HITORI: "Hitori",
    Domain.MAZE: "Maze",
    Domain.MATH: "Math",
}


@dataclass(frozen=True)
class TableRow:
    domain: Domain
    tier: Tier
    solvable: int
    unsolvable: int


# Per-split puzzle counts of the reference dataset. Train pools maze difficulties.
TABLE1_COUNTS: Dict[Split, Tuple[TableRow, ...]] = {
    Split.TRAIN: (
        TableRow(Domain.GAME24, Tier.EASY, 50, 50),
        TableRow(Domain.HAM_CYCLE, Tier.EASY, 48, 48),
        TableRow(Domain.HAM_PATH, Tier.EASY, 50, 50),
        TableRow(Domain.HITORI, Tier.EASY, 50, 50),
        TableRow(Domain.MAZE, Tier.EASY, 100, 59),
    ),
    Split.TEST: (
        TableRow(Domain.GAME24, Tier.EASY, 50, 50),
        TableRow(Domain.HAM_CYCLE, Tier.EASY, 48, 50),
        TableRow(Domain.HAM_PATH, Tier.EASY, 50, 50),
        TableRow(Domain.HITORI, Tier.EASY, 50, 50),
        TableRow(Domain.MAZE, Tier.EASY, 100, 94),
        TableRow(Domain.MAZE, Tier.HARD, 100, 100),
    ),
}


# ---------------------------------------------------------------------------
# Reading and writing
# ---------------------------------------------------------------------------

@dataclass
class Manifest:
    counts: Dict[str, Dict[str, Dict[str, int]]] = field(default_factory=dict)
    config_digest: str = ""
    tool_version: str = __version__

    @classmethod
    def for_records(cls, records: Iterable[DatasetRecord], config: Optional[Dict[str, Any]] = None) -> "Manifest":
        counts: Dict[str, Dict[str, Dict[str, int]]] = {}
        for record in records:
            by_domain = counts.setdefault(record.split.value, {})
            by_label = by_domain.setdefault(record.instance.domain.value, {})
            label = record.instance.label.value
            by_label[label] = by_label.get(label, 0) + 1
        return cls(counts=counts, config_digest=config_digest(config or {}))

    def to_dict(self) -> Dict[str, Any]:
        return {"counts": self.counts, "config_digest": self.config_digest,
                "tool_version": self.tool_version}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Manifest":
        return cls(data.get("counts", {}), data.get("config_digest", ""),
                   data.get("tool_version", ""))

    def matches(self, records: Iterable[DatasetRecord]) -> bool:
        return Manifest.for_records(records).counts == self.counts


def config_digest(config: Dict[str, Any]) -> str:
    canonical = json.dumps(config, sort_keys=True, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def manifest_path(path: Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + MANIFEST_SUFFIX)


def write_records(records: Iterable[DatasetRecord], path: Path,
                  config: Optional[Dict[str, Any]] = None) -> Manifest:
    """Write one JSON object per line plus the manifest sidecar."""
    records = list(records)
    manifest = Manifest.for_records(records, config)
    try:
        with open(path, "w", encoding="utf-8") as f:
            for record in records:
                f.write(json.dumps(record.to_dict(), ensure_ascii=False, sort_keys=True))
                f.write("\n")
        with open(manifest_path(path), "w", encoding="utf-8") as f:
            json.dump(manifest.to_dict(), f, indent=2, sort_keys=True)
    except OSError as e:
        raise DatasetIOError(f"cannot write {path}: {e}")
    logger.info("wrote %d records to %s", len(records), path)
    return manifest


def read_records(path: Path) -> List[DatasetRecord]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.readlines()
    except OSError as e:
        raise DatasetIOError(f"cannot read {path}: {e}")
    records = []
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
            if not isinstance(data, dict):
                raise ValueError("record is not a JSON object")
            records.append(DatasetRecord.from_dict(data))
        except (ValueError, KeyError, TypeError) as e:
            raise SchemaError(line_no, str(e))
    return records


def read_manifest(path: Path) -> Optional[Manifest]:
    sidecar = manifest_path(path)
    if not sidecar.exists():
        return None
    try:
        with open(sidecar, "r", encoding="utf-8") as f:
            return Manifest.from_dict(json.load(f))
    except (json.JSONDecodeError, OSError) as e:
        raise DatasetIOError(f"cannot read manifest {sidecar}: {e}")


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------

def row_name(record: DatasetRecord) -> str:
    """Test mazes keep their difficulty split; everything else is one row per domain."""
    inst = record.instance
    name = DISPLAY_NAMES[inst.domain]
    if inst.domain is Domain.MAZE and record.split is Split.TEST:
        name += "(Easy)" if inst.difficulty.tier is Tier.EASY else "(Hard)"
    return name


@dataclass
class StatsTable:
    # split -> row name -> (solvable, unsolvable)
    rows: Dict[str, Dict[str, List[int]]] = field(default_factory=dict)

    def totals(self, split: str) -> Tuple[int, int]:
        solvable = sum(counts[0] for counts in self.rows.get(split, {}).values())
        unsolvable = sum(counts[1] for counts in self.rows.get(split, {}).values())
        return solvable, unsolvable

    def grand_total(self) -> int:
        return sum(sum(self.totals(split)) for split in self.rows)

    def row(self, split: str, name: str) -> Tuple[int, int, int]:
        s, u = self.rows.get(split, {}).get(name, [0, 0])
        return s, u, s + u

    def render(self) -> str:
        lines = [f"{'Split':<12}{'Domain':<22}{'Solvable':>10}{'Unsolvable':>12}{'Total':>8}",
                 "-" * 64]
        for split in sorted(self.rows, key=lambda s: (s != "train", s)):
            for name, (s, u) in self.rows[split].items():
                lines.append(f"{split.title():<12}{name:<22}{s:>10}{u:>12}{s + u:>8}")
            s, u = self.totals(split)
            lines.append(f"{split.title() + ' Total':<12}{'--':<22}{s:>10}{u:>12}{s + u:>8}")
            lines.append("-" * 64)
        if not self.rows:
            lines.append(f"{'Total':<12}{'--':<22}{0:>10}{0:>12}{0:>8}")
        return "\n".join(lines)


def stats(records: Iterable[DatasetRecord]) -> StatsTable:
    table = StatsTable()
    for record in records:
        split_rows = table.rows.setdefault(record.split.value, {})
        counts = split_rows.setdefault(row_name(record), [0, 0])
        counts[0 if record.instance.label is Label.SOLVABLE else 1] += 1
    return table


# ---------------------------------------------------------------------------
# Batch generation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GenerationJob:
    domain: Domain
    request: domains.GenerationRequest
    index: int


def _run_job(job: GenerationJob) -> PuzzleInstance:
    return domains.adapter(job.domain).generate(job.request)


def _job(domain: Domain, label: Label, tier: Tier, seed: int, index: int, retry: int,
         size: Optional[int], strategy: Optional[str], max_attempts: Optional[int]) -> GenerationJob:
    domain_code = list(Domain).index(domain)
    label_code = list(Label).index(label)
    tier_code = list(Tier).index(tier)
    job_seed = SeededRng(seed).derive_seed(domain_code, label_code, tier_code, index, retry)
    request = domains.GenerationRequest(label, tier, job_seed, size, strategy, max_attempts)
    return GenerationJob(domain, request, index)


def generate_records(domain: Domain, solvable: int, unsolvable: int, seed: int,
                     split: Split = Split.TRAIN, tier: Tier = Tier.EASY,
                     size: Optional[int] = None, strategy: Optional[str] = None,
                     max_attempts: Optional[int] = None, workers: int = 1,
                     prompts: Optional[PromptBook] = None,
                     max_retries: int = 50) -> List[DatasetRecord]:
    """
    Generate `solvable` + `unsolvable` instances of one domain. Duplicate
    payloads are regenerated from the next seed in a fixed order, so the
    result is the same for any worker count. Records come back sorted by id.
    """
    if domains.adapter(domain).generate is None:
        raise domains.UnknownDomain(f"{domain.value} has no puzzle generator")
    prompts = prompts or PromptBook()
    plan = [(label, index) for label, count in ((Label.SOLVABLE, solvable), (Label.UNSOLVABLE, unsolvable))
            for index in range(count)]
    jobs = [_job(domain, label, tier, seed, index, 0, size, strategy, max_attempts)
            for label, index in plan]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            instances = list(pool.map(_run_job, jobs))
    else:
        instances = [_run_job(job) for job in jobs]

    seen = set()
    kept: List[PuzzleInstance] = []
    for (label, index), instance in zip(plan, instances):
        retry = 0
        while instance.fingerprint() in seen:
            retry += 1
            if retry > max_retries:
                raise UnsolvableError(f"could not find a distinct {domain.value} instance "
                                      f"after {max_retries} retries")
            logger.debug("duplicate %s instance, retry %d", domain.value, retry)
            instance = _run_job(_job(domain, label, tier, seed, index, retry, size, strategy, max_attempts))
        seen.add(instance.fingerprint())
        kept.append(instance)

    records = [DatasetRecord(inst.with_prompt(prompts.render(inst, split)), split) for inst in kept]
    records.sort(key=lambda r: r.instance.id)
    return records


def generate_table(split: Split, seed: int, workers: int = 1,
                   prompts: Optional[PromptBook] = None,
                   rows: Optional[Iterable[TableRow]] = None) -> List[DatasetRecord]:
    """All puzzle rows of a split at the reference counts (or the given rows)."""
    records: List[DatasetRecord] = []
    for row in rows if rows is not None else TABLE1_COUNTS[split]:
        records.extend(generate_records(row.domain, row.solvable, row.unsolvable, seed,
                                        split=split, tier=row.tier, workers=workers,
                                        prompts=prompts))
    return records


@dataclass(frozen=True)
class Mismatch:
    id: str
    stored: str
    certified: str
    detail: str = ""


def verify_records(records: Iterable[DatasetRecord]) -> List[Mismatch]:
    """Re-certify every label from its payload and re-check stored witnesses."""
    mismatches = []
    for record in records:
        inst = record.instance
        try:
            certified = domains.certify(inst)
        except (UnsolvableError, ValueError, KeyError) as e:
            mismatches.append(Mismatch(inst.id, inst.label.value, "error", str(e)))
            continue
        if certified is not inst.label:
            mismatches.append(Mismatch(inst.id, inst.label.value, certified.value))
        elif inst.label is Label.SOLVABLE and not domains.witness_holds(inst):
            mismatches.append(Mismatch(inst.id, inst.label.value, certified.value, "witness rejected"))
    return mismatches


def counts_by_domain(records: Iterable[DatasetRecord]) -> Dict[str, Dict[str, int]]:
    counts: Dict[str, Dict[str, int]] = defaultdict(lambda: {"solvable": 0, "unsolvable": 0})
    for record in records:
        counts[record.instance.domain.value][record.instance.label.value] += 1
    return dict(counts)
