"""
Unsolvable - verifiably solvable and unsolvable reasoning instances

Generators and exact certifiers for Game24, Hamiltonian cycle/path, Hitori
and maze puzzles, an oracle-driven pipeline for unsolvable math problems,
and the reward engine and refusal-calibration simulator that consume them.
"""

__version__ = "0.1.0"

from .model import (
    DatasetRecord,
    Difficulty,
    Domain,
    Label,
    PuzzleInstance,
    Rational,
    Split,
    Tier,
    UnsolvableError,
)
from .rewards import (
    RewardBreakdown,
    RewardConfig,
    TauSchedule,
    decision_threshold,
    grade_group,
    group_advantages,
    score,
)
from .dataset import read_records, stats, write_records

# CLI is available but not exported by default
# Access via: from unsolvable.cli import main

__all__ = [
    "DatasetRecord",
    "Difficulty",
    "Domain",
    "Label",
    "PuzzleInstance",
    "Rational",
    "Split",
    "Tier",
    "UnsolvableError",
    "RewardBreakdown",
    "RewardConfig",
    "TauSchedule",
    "decision_threshold",
    "grade_group",
    "group_advantages",
    "score",
    "read_records",
    "stats",
    "write_records",
]
