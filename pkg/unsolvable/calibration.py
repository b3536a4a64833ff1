"""
Refusal-calibration simulator.

A synthetic agent picks one of three actions (attempt, declare unsolvable,
refuse) for three instance types (easy solvable, unsolvable, hard solvable).
Its logits are a shared bias plus a per-type term, so what it learns on one
type leaks into the others. Each step samples a group of responses, scores
them with the reward engine, and moves the logits along reward times the
softmax score function.
"""

import csv
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .model import Label, UnsolvableError
from .rewards import (
    DEFAULT_GROUP_SIZE, Kind, RewardConfig, TauSchedule, calibration_reward, score,
)
from .rng import SeededRng


class EmptyTrace(UnsolvableError):
    pass


class Action(Enum):
    ATTEMPT = 0
    DECLARE = 1
    REFUSE = 2


_KIND = {Action.ATTEMPT: Kind.ANSWER, Action.DECLARE: Kind.UNSOLVABLE, Action.REFUSE: Kind.REFUSAL}


class InstanceType(Enum):
    SOLVABLE_EASY = "solvable_easy"
    UNSOLVABLE = "unsolvable"
    HARD = "hard"

    @property
    def label(self) -> Label:
        return Label.UNSOLVABLE if self is InstanceType.UNSOLVABLE else Label.SOLVABLE


class TauMode(Enum):
    FIXED = "fixed"
    PROGRESSIVE = "progressive"
    ADAPTIVE = "adaptive"


def _default_mix() -> Dict[InstanceType, float]:
    return {InstanceType.SOLVABLE_EASY: 0.4, InstanceType.UNSOLVABLE: 0.3, InstanceType.HARD: 0.3}


def _default_capability() -> Dict[InstanceType, float]:
    return {InstanceType.SOLVABLE_EASY: 0.9, InstanceType.UNSOLVABLE: 0.0, InstanceType.HARD: 0.2}


@dataclass(frozen=True)
class SimConfig:
    mix: Dict[InstanceType, float] = field(default_factory=_default_mix)
    capability: Dict[InstanceType, float] = field(default_factory=_default_capability)
    reward: RewardConfig = field(default_factory=lambda: RewardConfig(tau=TauSchedule(0.3, 0.95, 5000)))
    tau_mode: TauMode = TauMode.PROGRESSIVE
    fixed_tau: float = 0.5
    adaptive_margin: float = 0.05
    adaptive_decay: float = 0.9
    include_unsolvable_data: bool = True
    steps: int = 5000
    learning_rate: float = 0.1
    group_size: int = DEFAULT_GROUP_SIZE
    seed: int = 0

    def __post_init__(self):
        if abs(sum(self.mix.values()) - 1.0) > 1e-9:
            raise ValueError("instance mix fractions must sum to 1")
        if any(not 0.0 <= eps <= 1.0 for eps in self.capability.values()):
            raise ValueError("capabilities must lie in [0, 1]")
        if self.steps < 0 or self.group_size < 1:
            raise ValueError("steps must be >= 0 and group_size >= 1")

    def training_mix(self) -> Dict[InstanceType, float]:
        """The mix actually sampled; unsolvable instances drop out when excluded."""
        mix = {t: w for t, w in self.mix.items() if w > 0}
        if not self.include_unsolvable_data:
            mix.pop(InstanceType.UNSOLVABLE, None)
        total = sum(mix.values())
        if total <= 0:
            raise ValueError("training mix is empty")
        return {t: w / total for t, w in mix.items()}


PRESETS = ("full", "no-unsdata", "no-penalty", "fixed-tau")


def preset(name: str, **overrides) -> SimConfig:
    """Ablation configurations: full method, without unsolvable data, without penalty, fixed tau."""
    base = SimConfig()
    if name == "full":
        config = base
    elif name == "no-unsdata":
        config = replace(base, include_unsolvable_data=False)
    elif name == "no-penalty":
        config = replace(base, reward=replace(base.reward, rho=0.0))
    elif name == "fixed-tau":
        config = replace(base, tau_mode=TauMode.FIXED)
    else:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return replace(config, **overrides)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = np.exp(logits - logits.max())
    return shifted / shifted.sum()


class SyntheticAgent:
    def __init__(self, capability: Dict[InstanceType, float], learning_rate: float):
        self.capability = dict(capability)
        self.learning_rate = learning_rate
        self.shared = np.zeros(len(Action))
        self.specific = {t: np.zeros(len(Action)) for t in InstanceType}

    def logits(self, kind: InstanceType) -> np.ndarray:
        return self.shared + self.specific[kind]

    def policy(self, kind: InstanceType) -> np.ndarray:
        return softmax(self.logits(kind))

    def update(self, kind: InstanceType, gradient: np.ndarray) -> None:
        step = self.learning_rate * gradient
        self.shared += step
        self.specific[kind] += step

    def expected_rewards(self, kind: InstanceType, tau: float, config: RewardConfig) -> np.ndarray:
        """Per-action expected reward with beta at the policy's expected group accuracy."""
        probs = self.policy(kind)
        eps = self.capability.get(kind, 0.0)
        label = kind.label
        if label is Label.SOLVABLE:
            beta = probs[Action.ATTEMPT.value] * eps
            attempt = eps * score(label, Kind.ANSWER, True, config).total
        else:
            beta = probs[Action.DECLARE.value]
            attempt = score(label, Kind.ANSWER, False, config).total
        declare = score(label, Kind.UNSOLVABLE, None, config).total
        refuse = calibration_reward(Kind.REFUSAL, tau, beta, config.lam)
        return np.array([attempt, declare, refuse])

    def expected_update(self, kind: InstanceType, tau: float, config: RewardConfig) -> np.ndarray:
        """lr * E[R (onehot(a) - pi)] = lr * pi * (R - E[R])."""
        probs = self.policy(kind)
        rewards = self.expected_rewards(kind, tau, config)
        return self.learning_rate * probs * (rewards - probs @ rewards)


def greedy_decision(p: float, epsilon_cap: float, rho: float) -> Action:
    """Non-learning agent: declare only when it strictly beats attempting in expectation."""
    attempt = (1 - p) * epsilon_cap
    reject = p * 1 + (1 - p) * rho
    return Action.DECLARE if reject > attempt else Action.ATTEMPT


SERIES = ("refusal_rate", "declare_rate", "beta", "tau", "mean_reward",
          "accuracy", "hard_refusal_rate")


@dataclass
class SimTrace:
    refusal_rate: List[float] = field(default_factory=list)
    declare_rate: List[float] = field(default_factory=list)
    beta: List[float] = field(default_factory=list)
    tau: List[float] = field(default_factory=list)
    mean_reward: List[float] = field(default_factory=list)
    accuracy: List[float] = field(default_factory=list)
    hard_refusal_rate: List[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.tau)

    def series(self, name: str) -> List[float]:
        return getattr(self, name)

    def write_csv(self, path: Path) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(("step",) + SERIES)
            for step in range(len(self)):
                writer.writerow([step] + [repr(self.series(name)[step]) for name in SERIES])


def _sample_index(weights, u: float) -> int:
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if u < acc:
            return i
    return len(weights) - 1


def _record(trace: SimTrace, agent: SyntheticAgent, mix: Dict[InstanceType, float]) -> None:
    policies = {t: agent.policy(t) for t in InstanceType}
    trace.refusal_rate.append(float(sum(w * policies[t][Action.REFUSE.value] for t, w in mix.items())))
    trace.declare_rate.append(float(policies[InstanceType.UNSOLVABLE][Action.DECLARE.value]))
    trace.hard_refusal_rate.append(float(policies[InstanceType.HARD][Action.REFUSE.value]))
    solvable = {t: w for t, w in mix.items() if t.label is Label.SOLVABLE}
    weight = sum(solvable.values())
    accuracy = sum(w * policies[t][Action.ATTEMPT.value] * agent.capability.get(t, 0.0)
                   for t, w in solvable.items())
    trace.accuracy.append(float(accuracy / weight) if weight else 0.0)


def simulate(config: SimConfig) -> SimTrace:
    rng = SeededRng(config.seed)
    agent = SyntheticAgent(config.capability, config.learning_rate)
    mix = config.training_mix()
    kinds = list(mix)
    weights = [mix[k] for k in kinds]
    reward = config.reward
    trace = SimTrace()
    tau = config.fixed_tau if config.tau_mode is TauMode.FIXED else reward.tau.at(0)
    beta_ema: Optional[float] = None

    for step in range(config.steps):
        if config.tau_mode is TauMode.PROGRESSIVE:
            tau = reward.tau.at(step)
        _record(trace, agent, mix)
        kind = kinds[_sample_index(weights, rng.random())]
        probs = agent.policy(kind)
        eps = agent.capability.get(kind, 0.0)
        actions, correct = [], []
        for _ in range(config.group_size):
            action = Action(_sample_index(probs, rng.random()))
            if action is Action.ATTEMPT:
                ok = kind.label is Label.SOLVABLE and rng.random() < eps
            else:
                ok = action is Action.DECLARE and kind.label is Label.UNSOLVABLE
            actions.append(action)
            correct.append(ok)
        beta = sum(correct) / len(correct)
        rewards = []
        for action, ok in zip(actions, correct):
            answer_correct = ok if action is Action.ATTEMPT else None
            partial = score(kind.label, _KIND[action], answer_correct, reward)
            r_cal = calibration_reward(_KIND[action], tau, beta, reward.lam)
            rewards.append(partial.total + r_cal)
        gradient = np.zeros(len(Action))
        for action, r in zip(actions, rewards):
            onehot = np.zeros(len(Action))
            onehot[action.value] = 1.0
            gradient += r * (onehot - probs)
        agent.update(kind, gradient / len(actions))

        trace.beta.append(beta)
        trace.tau.append(tau)
        trace.mean_reward.append(float(np.mean(rewards)))

        if config.tau_mode is TauMode.ADAPTIVE:
            beta_ema = beta if beta_ema is None else (
                config.adaptive_decay * beta_ema + (1 - config.adaptive_decay) * beta)
            tau = min(reward.tau.terminal, max(tau, beta_ema + config.adaptive_margin))
    return trace


@dataclass(frozen=True)
class SeriesSummary:
    final: float
    area: float
    last: float


def summarize(trace: SimTrace) -> Dict[str, SeriesSummary]:
    """Final-window (last 10% of steps) average, whole-run mean, and last value per series."""
    if len(trace) == 0:
        raise EmptyTrace("cannot summarize an empty trace")
    window = max(1, math.ceil(len(trace) / 10))
    summary = {}
    for name in SERIES:
        values = trace.series(name)
        tail = values[-window:]
        summary[name] = SeriesSummary(
            final=math.fsum(tail) / len(tail),
            area=math.fsum(values) / len(values),
            last=values[-1],
        )
    return summary
