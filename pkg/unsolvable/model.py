"""
Shared data model for generated instances.

Every generator returns a PuzzleInstance; every serialized file holds
DatasetRecords. Exact arithmetic lives here too so that no verifier ever
touches a float.
"""

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Optional, Tuple


Rational = Fraction
"""Exact fraction. Always normalized, denominator > 0, zero is 0/1."""


class UnsolvableError(Exception):
    """Base class for every error raised by this package."""


class DivisionByZero(UnsolvableError, ZeroDivisionError):
    """Division by an exact zero."""


class ExhaustedAttempts(UnsolvableError):
    """A rejection sampler ran out of attempts without hitting its target."""

    def __init__(self, what: str, attempts: int):
        super().__init__(f"{what}: no candidate matched after {attempts} attempts")
        self.what = what
        self.attempts = attempts


class UnknownDomain(UnsolvableError):
    """No generator or checker is registered for a domain."""


class Op(Enum):
    ADD = "+"
    SUB = "-"
    MUL = "*"
    DIV = "/"


def rational_apply(op: Op, a: Rational, b: Rational) -> Rational:
    """Apply one arithmetic operator exactly."""
    if op is Op.ADD:
        return a + b
    if op is Op.SUB:
        return a - b
    if op is Op.MUL:
        return a * b
    if b == 0:
        raise DivisionByZero(f"{a} / 0")
    return a / b


class Label(Enum):
    SOLVABLE = "solvable"
    UNSOLVABLE = "unsolvable"


class Tier(Enum):
    EASY = "easy"
    HARD = "hard"


class Domain(Enum):
    GAME24 = "game24"
    HAM_CYCLE = "hamcycle"
    HAM_PATH = "hampath"
    HITORI = "hitori"
    MAZE = "maze"
    MATH = "math"


class Split(Enum):
    TRAIN = "train"
    TEST = "test"


@dataclass(frozen=True)
class Difficulty:
    """Easy/Hard tier plus the domain's size scalars (k, n, or width/height)."""

    tier: Tier
    scale: Tuple[int, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {"tier": self.tier.value, "scale": list(self.scale)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Difficulty":
        return cls(Tier(data["tier"]), tuple(int(v) for v in data.get("scale", ())))


def instance_id(domain: Domain, difficulty: Difficulty, label: Label, seed: int) -> str:
    """Stable id derived from the generation coordinates."""
    key = "|".join([
        domain.value,
        difficulty.tier.value,
        ",".join(str(v) for v in difficulty.scale),
        label.value,
        str(seed),
    ])
    digest = hashlib.sha256(key.encode("utf-8")).hexdigest()[:16]
    return f"{domain.value}-{digest}"


@dataclass(frozen=True)
class PuzzleInstance:
    """One generated problem with its certified label."""

    id: str
    domain: Domain
    label: Label
    difficulty: Difficulty
    payload: Dict[str, Any]
    prompt: str = ""
    witness: Optional[Any] = None
    seed: int = 0
    provenance: Dict[str, Any] = field(default_factory=dict)

    def with_prompt(self, prompt: str) -> "PuzzleInstance":
        return PuzzleInstance(
            id=self.id,
            domain=self.domain,
            label=self.label,
            difficulty=self.difficulty,
            payload=self.payload,
            prompt=prompt,
            witness=self.witness,
            seed=self.seed,
            provenance=self.provenance,
        )

    def fingerprint(self) -> str:
        """Canonical payload digest, used to drop duplicate instances in a run."""
        canonical = json.dumps(
            {"domain": self.domain.value, "payload": self.payload}, sort_keys=True
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


REQUIRED_FIELDS = (
    "id", "domain", "split", "label", "difficulty",
    "prompt", "payload", "witness", "seed", "provenance",
)


@dataclass(frozen=True)
class DatasetRecord:
    """A PuzzleInstance placed in a split. Unknown fields ride along in `extra`."""

    instance: PuzzleInstance
    split: Split
    extra: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        inst = self.instance
        data: Dict[str, Any] = {
            "id": inst.id,
            "domain": inst.domain.value,
            "split": self.split.value,
            "label": inst.label.value,
            "difficulty": inst.difficulty.to_dict(),
            "prompt": inst.prompt,
            "payload": inst.payload,
            "witness": inst.witness,
            "seed": inst.seed,
            "provenance": inst.provenance,
        }
        for key, value in self.extra.items():
            data.setdefault(key, value)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DatasetRecord":
        """Build a record; raises KeyError/ValueError on schema problems."""
        missing = [name for name in REQUIRED_FIELDS if name not in data]
        if missing:
            raise KeyError(f"missing required field(s): {', '.join(missing)}")
        instance = PuzzleInstance(
            id=str(data["id"]),
            domain=Domain(data["domain"]),
            label=Label(data["label"]),
            difficulty=Difficulty.from_dict(data["difficulty"]),
            payload=dict(data["payload"]),
            prompt=str(data["prompt"]),
            witness=data["witness"],
            seed=int(data["seed"]),
            provenance=dict(data["provenance"]),
        )
        extra = {k: v for k, v in data.items() if k not in REQUIRED_FIELDS}
        return cls(instance=instance, split=Split(data["split"]), extra=extra)
