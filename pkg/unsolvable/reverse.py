"""
Reverse construction of unsolvable math problems.

Starting from a solvable seed with a worked rationale: ask the oracle for a
contradiction plan, have it write a new statement that embeds the
contradiction, then confirm unsolvability in two tiers (candidate alone,
then candidate plus plan). Only confirmed candidates become instances.
"""

import hashlib
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence

from .model import (
    Difficulty, Domain, Label, PuzzleInstance, Tier, UnsolvableError, instance_id,
)
from .oracle import TextOracle, complete_with_retries
from .rewards import DEFAULT_MARKERS, Kind, Markers, classify_response, extract_answer

logger = logging.getLogger(__name__)


class PlanParseError(UnsolvableError):
    pass


class EmptyOutput(UnsolvableError):
    pass


class InvalidSeed(UnsolvableError):
    pass


class Strategy(Enum):
    CONSTRAINT = "constraint"
    AXIOM = "axiom"


class VerificationTier(Enum):
    TIER1 = 1
    TIER2 = 2


class Outcome(Enum):
    CONFIRMED_UNSOLVABLE = "confirmed_unsolvable"
    REJECTED = "rejected"


@dataclass(frozen=True)
class SeedProblem:
    statement: str
    reference_rationale: str
    reference_answer: str

    def __post_init__(self):
        if not self.statement.strip():
            raise InvalidSeed("seed statement is empty")
        if not self.reference_rationale.strip() or not self.reference_answer.strip():
            raise InvalidSeed("seed needs a rationale and a reference answer")

    def steps(self) -> List[str]:
        return [line.strip() for line in self.reference_rationale.splitlines() if line.strip()]


@dataclass(frozen=True)
class ContradictionPlan:
    strategy: Strategy
    location: int
    mechanism: str

    def to_dict(self):
        return {"strategy": self.strategy.value, "location": self.location,
                "mechanism": self.mechanism}

    def render(self) -> str:
        return (f"STRATEGY: {self.strategy.value}\n"
                f"LOCATION: {self.location}\n"
                f"MECHANISM: {self.mechanism}")


@dataclass(frozen=True)
class VerificationVerdict:
    tier: VerificationTier
    outcome: Outcome

    @property
    def confirmed(self) -> bool:
        return self.outcome is Outcome.CONFIRMED_UNSOLVABLE


PLAN_PROMPT = """You are designing an unsolvable variant of a solvable math problem.

Problem:
{statement}

Reference solution, one step per line (steps are numbered from 0):
{rationale}

Reference answer: {answer}

Choose one strategy:
- constraint: add an external condition that conflicts with the others
- axiom: change a step so that it would violate a basic mathematical fact

Reply with exactly one fenced block in this format:
```plan
STRATEGY: constraint|axiom
LOCATION: <step number>
MECHANISM: <how the contradiction is introduced>
```"""

SYNTHESIS_PROMPT = """Write a new problem statement based on the problem below.

Original problem:
{statement}

Contradiction plan:
{plan}

Keep the style, length and difficulty of the original problem, but build the
planned contradiction into the statement so that no answer can satisfy it.
Output only the new problem statement."""

TIER1_PROMPT = """Solve the following problem. If it contains a contradiction and cannot
be solved, explain why and answer with <unsolvable>.

{candidate}"""

TIER2_PROMPT = """The problem below was built to contain a contradiction.

Problem:
{candidate}

CONTRADICTION PLAN:
{plan}

Reassess whether the problem is solvable given this plan. If it cannot be
solved, answer with <unsolvable>; otherwise give the answer."""

SOLVE_PROMPT = """Solve the following problem and put the final answer in \\boxed{{}}.

{statement}"""


_PLAN_BLOCK = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)
_PLAN_LINE = re.compile(r"^\s*(STRATEGY|LOCATION|MECHANISM)\s*:\s*(.+?)\s*$", re.MULTILINE | re.IGNORECASE)


def parse_plan(text: str, seed: SeedProblem) -> ContradictionPlan:
    """Read STRATEGY/LOCATION/MECHANISM from the last fenced block (or the bare text)."""
    blocks = _PLAN_BLOCK.findall(text)
    body = blocks[-1] if blocks else text
    fields = {key.upper(): value for key, value in _PLAN_LINE.findall(body)}
    missing = [key for key in ("STRATEGY", "LOCATION", "MECHANISM") if key not in fields]
    if missing:
        raise PlanParseError(f"plan is missing {', '.join(missing)}")
    raw_strategy = fields["STRATEGY"].lower()
    strategy = next((s for s in Strategy if raw_strategy.startswith(s.value)), None)
    if strategy is None:
        raise PlanParseError(f"unknown strategy {fields['STRATEGY']!r}")
    try:
        location = int(re.search(r"-?\d+", fields["LOCATION"]).group())
    except AttributeError:
        raise PlanParseError(f"location is not a step number: {fields['LOCATION']!r}")
    if not 0 <= location < len(seed.steps()):
        raise PlanParseError(f"location {location} outside the {len(seed.steps())} rationale steps")
    return ContradictionPlan(strategy, location, fields["MECHANISM"])


def plan(seed: SeedProblem, oracle: TextOracle) -> ContradictionPlan:
    prompt = PLAN_PROMPT.format(
        statement=seed.statement,
        rationale="\n".join(f"{i}. {step}" for i, step in enumerate(seed.steps())),
        answer=seed.reference_answer,
    )
    return parse_plan(complete_with_retries(oracle, prompt), seed)


def synthesize(seed: SeedProblem, contradiction: ContradictionPlan, oracle: TextOracle) -> str:
    prompt = SYNTHESIS_PROMPT.format(statement=seed.statement, plan=contradiction.render())
    candidate = complete_with_retries(oracle, prompt).strip()
    if not candidate:
        raise EmptyOutput("oracle returned an empty problem statement")
    return candidate


def _declares(oracle: TextOracle, prompt: str, samples: int, markers: Markers) -> bool:
    for _ in range(samples):
        reply = complete_with_retries(oracle, prompt)
        if classify_response(reply, markers).kind is Kind.UNSOLVABLE:
            return True
    return False


def verify_two_tier(candidate: str, contradiction: ContradictionPlan, oracle: TextOracle,
                    tier1_samples: int = 1, markers: Markers = DEFAULT_MARKERS) -> VerificationVerdict:
    if not candidate.strip():
        raise EmptyOutput("nothing to verify")
    if _declares(oracle, TIER1_PROMPT.format(candidate=candidate), tier1_samples, markers):
        return VerificationVerdict(VerificationTier.TIER1, Outcome.CONFIRMED_UNSOLVABLE)
    tier2 = TIER2_PROMPT.format(candidate=candidate, plan=contradiction.render())
    if _declares(oracle, tier2, 1, markers):
        return VerificationVerdict(VerificationTier.TIER2, Outcome.CONFIRMED_UNSOLVABLE)
    return VerificationVerdict(VerificationTier.TIER2, Outcome.REJECTED)


def _normalize(answer: str) -> str:
    return re.sub(r"[\s$]", "", answer).lower()


def validate_seed(seed: SeedProblem, oracle: TextOracle) -> bool:
    """The oracle must reproduce the reference answer before the seed is used."""
    reply = complete_with_retries(oracle, SOLVE_PROMPT.format(statement=seed.statement))
    return _normalize(extract_answer(reply)) == _normalize(seed.reference_answer)


def seed_number(seed: SeedProblem) -> int:
    digest = hashlib.sha256(seed.statement.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def run(seed: SeedProblem, oracle: TextOracle, validate: bool = False,
        tier1_samples: int = 1, markers: Markers = DEFAULT_MARKERS) -> Optional[PuzzleInstance]:
    """Plan, synthesize, verify. Returns an instance only for confirmed candidates."""
    if validate and not validate_seed(seed, oracle):
        logger.info("seed rejected: oracle did not reproduce the reference answer")
        return None
    contradiction = plan(seed, oracle)
    candidate = synthesize(seed, contradiction, oracle)
    verdict = verify_two_tier(candidate, contradiction, oracle, tier1_samples, markers)
    if not verdict.confirmed:
        logger.info("candidate discarded after tier %d", verdict.tier.value)
        return None
    number = seed_number(seed)
    difficulty = Difficulty(Tier.HARD)
    return PuzzleInstance(
        id=instance_id(Domain.MATH, difficulty, Label.UNSOLVABLE, number),
        domain=Domain.MATH,
        label=Label.UNSOLVABLE,
        difficulty=difficulty,
        payload={"statement": candidate, "seed_statement": seed.statement},
        witness=None,
        seed=number,
        provenance={
            "certified_by": "model-verified",
            "plan": contradiction.to_dict(),
            "verdict": {"tier": verdict.tier.value, "outcome": verdict.outcome.value},
        },
    )


def run_many(seeds: Sequence[SeedProblem], oracle_factory: Callable[[], TextOracle],
             max_in_flight: int = 4,
             on_error: Optional[Callable[[int, UnsolvableError], None]] = None,
             **options) -> List[Optional[PuzzleInstance]]:
    """
    Independent seeds in parallel, at most max_in_flight at a time; results
    keep seed order. A seed that fails leaves None in its slot and is logged
    with its index; on_error, when given, also receives the index and error.
    """
    def one(index: int, seed: SeedProblem) -> Optional[PuzzleInstance]:
        try:
            return run(seed, oracle_factory(), **options)
        except UnsolvableError as e:
            logger.warning("seed %d skipped (%s): %s", index, type(e).__name__, e)
            if on_error is not None:
                on_error(index, e)
            return None

    with ThreadPoolExecutor(max_workers=max(1, max_in_flight)) as pool:
        return list(pool.map(one, range(len(seeds)), seeds))
