"""
Reward engine: response classification, the composite reward
(accuracy + detection + calibration), group-relative advantages, the
target-accuracy schedule, and the closed-form decision threshold.
"""

import re
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import domains
from .model import Label, PuzzleInstance, UnsolvableError

DEFAULT_GROUP_SIZE = 12


class GroupTooSmall(UnsolvableError):
    pass


class MissingCorrectness(UnsolvableError):
    pass


class Kind(Enum):
    ANSWER = "answer"
    UNSOLVABLE = "unsolvable"
    REFUSAL = "refusal"
    MALFORMED = "malformed"


@dataclass(frozen=True)
class Markers:
    """Case-insensitive substrings that turn a response into a tag."""

    unsolvable: Tuple[str, ...] = ("<unsolvable>",)
    refusal: Tuple[str, ...] = ("beyond my capabilities", "<beyond_capacity>")


DEFAULT_MARKERS = Markers()


@dataclass(frozen=True)
class Response:
    kind: Kind
    payload: Optional[str] = None


_BOXED = re.compile(r"\\boxed\{")
_FENCED = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)


def _boxed_spans(text: str) -> List[Tuple[int, str]]:
    spans = []
    for match in _BOXED.finditer(text):
        depth, i = 1, match.end()
        while i < len(text) and depth:
            if text[i] == "{":
                depth += 1
            elif text[i] == "}":
                depth -= 1
            i += 1
        if depth == 0:
            spans.append((match.start(), text[match.end():i - 1]))
    return spans


def extract_answer(text: str) -> str:
    """Last \\boxed{...} or fenced block, whichever comes later; else the last non-empty line."""
    spans = _boxed_spans(text)
    spans.extend((m.start(), m.group(1)) for m in _FENCED.finditer(text))
    if spans:
        return max(spans, key=lambda span: span[0])[1].strip()
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    return lines[-1] if lines else ""


def classify_response(text: str, markers: Markers = DEFAULT_MARKERS) -> Response:
    lowered = text.lower()
    declares = any(m.lower() in lowered for m in markers.unsolvable)
    refuses = any(m.lower() in lowered for m in markers.refusal)
    if declares and refuses:
        return Response(Kind.MALFORMED)
    if declares:
        return Response(Kind.UNSOLVABLE)
    if refuses:
        return Response(Kind.REFUSAL)
    return Response(Kind.ANSWER, extract_answer(text))


@dataclass(frozen=True)
class TauSchedule:
    """Linear ramp of the target accuracy from `initial` to `terminal` over `horizon` steps."""

    initial: float = 0.3
    terminal: float = 0.95
    horizon: int = 1000

    def __post_init__(self):
        if not 0.0 <= self.initial <= self.terminal <= 1.0:
            raise ValueError("need 0 <= initial <= terminal <= 1")
        if self.horizon < 0:
            raise ValueError("horizon must be non-negative")

    @classmethod
    def fixed(cls, value: float) -> "TauSchedule":
        return cls(value, value, 0)

    def at(self, step: int) -> float:
        if step < 0:
            raise ValueError("step must be non-negative")
        if self.horizon == 0 or step >= self.horizon:
            return self.terminal
        return self.initial + (self.terminal - self.initial) * step / self.horizon


def tau_at(step: int, schedule: TauSchedule) -> float:
    return schedule.at(step)


@dataclass(frozen=True)
class RewardConfig:
    rho: float = -0.5
    lam: float = 1.0
    tau: TauSchedule = field(default_factory=TauSchedule)
    epsilon: float = 1e-8
    markers: Markers = DEFAULT_MARKERS

    def __post_init__(self):
        if self.rho > 0:
            raise ValueError("rho must be <= 0")
        if self.lam <= 0:
            raise ValueError("lambda must be > 0")


@dataclass(frozen=True)
class RewardBreakdown:
    r_acc: float
    r_detect: float
    r_cal: float
    total: float

    @classmethod
    def of(cls, r_acc: float = 0.0, r_detect: float = 0.0, r_cal: float = 0.0) -> "RewardBreakdown":
        return cls(r_acc, r_detect, r_cal, r_acc + r_detect + r_cal)

    def with_calibration(self, r_cal: float) -> "RewardBreakdown":
        return RewardBreakdown.of(self.r_acc, self.r_detect, r_cal)


def score(label: Label, kind: Kind, answer_correct: Optional[bool],
          config: RewardConfig) -> RewardBreakdown:
    """Accuracy and detection components; refusals and malformed responses score zero here."""
    if kind is Kind.ANSWER:
        if answer_correct is None:
            raise MissingCorrectness("answers need a correctness flag")
        if label is Label.SOLVABLE and answer_correct:
            return RewardBreakdown.of(r_acc=1.0)
        return RewardBreakdown.of()
    if kind is Kind.UNSOLVABLE:
        return RewardBreakdown.of(r_detect=1.0 if label is Label.UNSOLVABLE else config.rho)
    return RewardBreakdown.of()


def calibration_reward(kind: Kind, tau: float, beta: float, lam: float) -> float:
    if kind is not Kind.REFUSAL:
        return 0.0
    return lam * (tau - beta)


def group_advantages(rewards: Sequence[float], epsilon: float = 1e-8) -> List[float]:
    """(R - mean) / (population std + epsilon)."""
    if len(rewards) < 2:
        raise GroupTooSmall(f"need at least 2 rewards, got {len(rewards)}")
    values = np.asarray(rewards, dtype=np.float64)
    advantages = (values - values.mean()) / (values.std(ddof=0) + epsilon)
    return advantages.tolist()


def _exact(x: float) -> Fraction:
    return Fraction(repr(float(x)))


def decision_threshold(epsilon_cap: float, rho: float) -> float:
    """Belief above which declaring unsolvable beats attempting: (eps - rho) / (1 + eps - rho)."""
    if not 0.0 <= epsilon_cap <= 1.0:
        raise ValueError("epsilon_cap must be in [0, 1]")
    if rho > 0:
        raise ValueError("rho must be <= 0")
    eps, r = _exact(epsilon_cap), _exact(rho)
    return float((eps - r) / (1 + eps - r))


# ---------------------------------------------------------------------------
# Grading
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GradedResponse:
    response: Response
    correct: bool
    breakdown: RewardBreakdown


@dataclass(frozen=True)
class GroupGrade:
    instance: PuzzleInstance
    beta: float
    tau: float
    graded: Tuple[GradedResponse, ...]

    @property
    def breakdowns(self) -> List[RewardBreakdown]:
        return [g.breakdown for g in self.graded]


Checker = Callable[[PuzzleInstance, str], bool]


def grade_group(instance: PuzzleInstance, responses: Sequence[str], config: RewardConfig,
                step: int, checker: Checker = domains.check_answer_text) -> GroupGrade:
    """
    Full breakdowns for one rollout group. beta is the share of correct
    responses; refusals count as not correct.
    """
    if not domains.has_domain(instance.domain):
        raise domains.UnknownDomain(instance.domain.value)
    classified = [classify_response(text, config.markers) for text in responses]
    flags = []
    for response in classified:
        if response.kind is Kind.ANSWER:
            flags.append(instance.label is Label.SOLVABLE and checker(instance, response.payload))
        else:
            flags.append(response.kind is Kind.UNSOLVABLE and instance.label is Label.UNSOLVABLE)
    beta = sum(flags) / len(flags) if flags else 0.0
    tau = config.tau.at(step)
    graded = []
    for response, correct in zip(classified, flags):
        answer_correct = correct if response.kind is Kind.ANSWER else None
        partial = score(instance.label, response.kind, answer_correct, config)
        r_cal = calibration_reward(response.kind, tau, beta, config.lam)
        graded.append(GradedResponse(response, correct, partial.with_calibration(r_cal)))
    return GroupGrade(instance, beta, tau, tuple(graded))


@dataclass
class MetricCounts:
    solvable: int = 0
    solvable_correct: int = 0
    unsolvable: int = 0
    unsolvable_detected: int = 0
    refusals: int = 0
    attempted: int = 0
    attempted_correct: int = 0
    responses: int = 0
    reward_sum: float = 0.0

    def add(self, grade: GroupGrade) -> None:
        for g in grade.graded:
            self.responses += 1
            self.reward_sum += g.breakdown.total
            if grade.instance.label is Label.SOLVABLE:
                self.solvable += 1
                self.solvable_correct += int(g.correct)
            else:
                self.unsolvable += 1
                self.unsolvable_detected += int(g.correct)
            if g.response.kind is Kind.REFUSAL:
                self.refusals += 1
            else:
                self.attempted += 1
                self.attempted_correct += int(g.correct)

    def summary(self) -> Dict[str, float]:
        def rate(num: int, den: int) -> float:
            return num / den if den else 0.0

        s = rate(self.solvable_correct, self.solvable)
        u = rate(self.unsolvable_detected, self.unsolvable)
        corr = rate(self.attempted_correct, self.attempted)
        rej = rate(self.refusals, self.responses)
        return {
            "responses": self.responses,
            "S": s,
            "U": u,
            "M": (s + u) / 2,
            "refusal_rate": rej,
            "mean_reward": rate(self.reward_sum, self.responses) if self.responses else 0.0,
            "Corr": corr,
            "Rej": rej,
            "C+R": corr + rej,
        }


def summarize_grades(grades: Sequence[GroupGrade]) -> Dict[str, Dict[str, float]]:
    """Metrics per domain plus an 'overall' entry."""
    per_domain: Dict[str, MetricCounts] = defaultdict(MetricCounts)
    overall = MetricCounts()
    for grade in grades:
        per_domain[grade.instance.domain.value].add(grade)
        overall.add(grade)
    report = {name: counts.summary() for name, counts in sorted(per_domain.items())}
    report["overall"] = overall.summary()
    return report
