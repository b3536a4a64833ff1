"""Refusal-calibration simulator: determinism, ablations and the greedy decision rule."""

import csv
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from unsolvable.calibration import (
    Action, EmptyTrace, InstanceType, SimConfig, SyntheticAgent, TauMode,
    greedy_decision, preset, simulate, summarize,
)
from unsolvable.rewards import RewardConfig, decision_threshold
from unsolvable.testing import describe, expect, it

SEEDS = range(10)


def easy_only(**overrides):
    mix = {InstanceType.SOLVABLE_EASY: 1.0, InstanceType.UNSOLVABLE: 0.0, InstanceType.HARD: 0.0}
    return SimConfig(mix=mix, **overrides)


def final(trace, name):
    return summarize(trace)[name].final


with describe("Calibration simulator"):

    with describe("config"):

        @it("builds the ablation presets")
        def test_presets():
            expect(preset("full").include_unsolvable_data).to_be_true()
            expect(preset("no-unsdata").include_unsolvable_data).to_be_false()
            expect(preset("no-penalty").reward.rho).to_equal(0.0)
            expect(preset("fixed-tau").tau_mode).to_equal(TauMode.FIXED)
            expect(preset("full", steps=10, seed=4).steps).to_equal(10)
            expect(lambda: preset("bogus")).to_raise(ValueError)

        @it("drops unsolvable instances from the training mix when excluded")
        def test_training_mix():
            mix = preset("no-unsdata").training_mix()
            expect(InstanceType.UNSOLVABLE in mix).to_be_false()
            expect(mix[InstanceType.SOLVABLE_EASY]).to_be_almost_equal(4 / 7, 1e-12)

        @it("validates the mix and sizes")
        def test_config_validation():
            expect(lambda: SimConfig(mix={InstanceType.HARD: 0.5})).to_raise(ValueError)
            expect(lambda: SimConfig(group_size=0)).to_raise(ValueError)

    with describe("simulate"):

        @it("is deterministic for a seed")
        def test_simulate_deterministic():
            config = preset("full", steps=200, seed=3)
            expect(simulate(config)).to_equal(simulate(config))
            expect(simulate(replace(config, seed=4))).to_not_equal(simulate(config))

        @it("records one value per step in every series")
        def test_simulate_lengths():
            trace = simulate(preset("full", steps=50))
            expect(len(trace)).to_equal(50)
            expect(trace.beta).to_have_length(50)
            expect(trace.refusal_rate[0]).to_be_almost_equal(1 / 3, 1e-12)

        @it("keeps an adaptive tau nondecreasing and capped")
        def test_simulate_adaptive():
            trace = simulate(preset("full", tau_mode=TauMode.ADAPTIVE, steps=400, seed=2))
            expect(all(a <= b for a, b in zip(trace.tau, trace.tau[1:]))).to_be_true()
            expect(max(trace.tau) <= 0.95).to_be_true()

        @it("writes a CSV with a header and one row per step")
        def test_write_csv():
            trace = simulate(preset("full", steps=20))
            with tempfile.TemporaryDirectory() as tmp:
                path = Path(tmp) / "trace.csv"
                trace.write_csv(path)
                with open(path, newline="") as f:
                    rows = list(csv.reader(f))
            expect(rows[0][:3]).to_equal(["step", "refusal_rate", "declare_rate"])
            expect(rows).to_have_length(21)

        @it("summarizes the final tenth of a run")
        def test_summarize():
            trace = simulate(preset("full", steps=200, seed=1))
            summary = summarize(trace)["beta"]
            expect(summary.final).to_be_almost_equal(float(np.mean(trace.beta[-20:])), 1e-12)
            expect(summary.last).to_equal(trace.beta[-1])
            expect(lambda: summarize(simulate(preset("full", steps=0)))).to_raise(EmptyTrace)

    with describe("learning dynamics", tags=["slow"]):

        @it("collapses refusal on easy data under a fixed tau")
        def test_fixed_tau_collapse():
            for seed in SEEDS:
                trace = simulate(easy_only(tau_mode=TauMode.FIXED, fixed_tau=0.5, seed=seed))
                expect(final(trace, "refusal_rate") <= 0.2 * trace.refusal_rate[0]).to_be_true(f"seed {seed}")

        @it("stops declaring unsolvable without unsolvable training data")
        def test_no_unsolvable_data():
            for seed in SEEDS:
                trace = simulate(preset("no-unsdata", seed=seed))
                expect(final(trace, "declare_rate") < 0.1 * trace.declare_rate[0]).to_be_true(f"seed {seed}")

        @it("keeps detection without giving up accuracy when penalized")
        def test_penalty_regularizes():
            full_declare, bare_declare, full_acc, bare_acc = [], [], [], []
            for seed in SEEDS:
                full = simulate(preset("full", seed=seed))
                bare = simulate(preset("no-penalty", seed=seed))
                full_declare.append(final(full, "declare_rate"))
                bare_declare.append(final(bare, "declare_rate"))
                full_acc.append(final(full, "accuracy"))
                bare_acc.append(final(bare, "accuracy"))
            expect(np.mean(full_declare) >= 0.5 * np.mean(bare_declare)).to_be_true()
            expect(np.mean(full_acc) >= np.mean(bare_acc) - 0.01).to_be_true()

        @it("preserves some refusal on hard instances with a progressive tau")
        def test_progressive_keeps_refusal():
            for seed in SEEDS:
                expect(final(simulate(preset("full", seed=seed)), "hard_refusal_rate") > 0).to_be_true()

    with describe("expected updates"):

        @it("pushes refusal down once group accuracy beats a fixed tau")
        def test_expected_update_sign():
            agent = SyntheticAgent({InstanceType.SOLVABLE_EASY: 0.9}, learning_rate=0.1)
            agent.shared = np.array([3.0, 0.0, 0.0])
            config = RewardConfig()
            rewards = agent.expected_rewards(InstanceType.SOLVABLE_EASY, 0.5, config)
            expect(rewards[Action.REFUSE.value] < 0).to_be_true()
            update = agent.expected_update(InstanceType.SOLVABLE_EASY, 0.5, config)
            expect(update[Action.REFUSE.value] < 0).to_be_true()
            expect(float(update.sum())).to_be_almost_equal(0.0, 1e-12)

    with describe("greedy decision rule"):

        @it("declares exactly above the closed-form threshold")
        def test_greedy_matches_threshold():
            for eps in (0.1, 0.2, 0.3):
                for rho in (0.0, -0.25, -0.5):
                    threshold = decision_threshold(eps, rho)
                    for i in range(21):
                        p = i / 20
                        declares = greedy_decision(p, eps, rho) is Action.DECLARE
                        expect(declares).to_equal(p > threshold, f"p={p} eps={eps} rho={rho}")
