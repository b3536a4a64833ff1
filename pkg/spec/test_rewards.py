"""Response classification, composite reward, advantages, tau schedule and thresholds."""

import numpy as np

from unsolvable.domains import UnknownDomain
from unsolvable.model import Domain, Label
from unsolvable.rewards import (
    GroupTooSmall, Kind, Markers, MissingCorrectness, RewardConfig, TauSchedule,
    calibration_reward, classify_response, decision_threshold, extract_answer,
    grade_group, group_advantages, score, summarize_grades, tau_at,
)
from unsolvable.rng import SeededRng
from unsolvable.testing import describe, expect, it

from spec.factories import InstanceFactory

# (label, kind, answer_correct) -> (r_acc, r_detect)
SCORE_TABLE = {
    (Label.SOLVABLE, Kind.ANSWER, True): (1.0, 0.0),
    (Label.SOLVABLE, Kind.ANSWER, False): (0.0, 0.0),
    (Label.SOLVABLE, Kind.UNSOLVABLE, None): (0.0, -0.5),
    (Label.SOLVABLE, Kind.REFUSAL, None): (0.0, 0.0),
    (Label.SOLVABLE, Kind.MALFORMED, None): (0.0, 0.0),
    (Label.UNSOLVABLE, Kind.ANSWER, True): (0.0, 0.0),
    (Label.UNSOLVABLE, Kind.ANSWER, False): (0.0, 0.0),
    (Label.UNSOLVABLE, Kind.UNSOLVABLE, None): (0.0, 1.0),
    (Label.UNSOLVABLE, Kind.REFUSAL, None): (0.0, 0.0),
    (Label.UNSOLVABLE, Kind.MALFORMED, None): (0.0, 0.0),
}


def fixed(tau):
    return RewardConfig(tau=TauSchedule.fixed(tau))


with describe("Rewards"):

    with describe("classify_response"):

        @it("recognizes the unsolvable tag")
        def test_classify_unsolvable():
            expect(classify_response("...therefore <unsolvable>").kind).to_equal(Kind.UNSOLVABLE)
            expect(classify_response("<UNSOLVABLE>").kind).to_equal(Kind.UNSOLVABLE)

        @it("recognizes a refusal")
        def test_classify_refusal():
            expect(classify_response("This is beyond my capabilities.").kind).to_equal(Kind.REFUSAL)

        @it("marks a response with both markers malformed")
        def test_classify_both():
            text = "<unsolvable> or maybe beyond my capabilities"
            expect(classify_response(text).kind).to_equal(Kind.MALFORMED)

        @it("extracts the answer span otherwise")
        def test_classify_answer():
            response = classify_response("Let me think.\nThe answer is \\boxed{4*6}.")
            expect(response.kind).to_equal(Kind.ANSWER)
            expect(response.payload).to_equal("4*6")

        @it("honours custom markers")
        def test_classify_custom_markers():
            markers = Markers(unsolvable=("[no solution]",), refusal=("i give up",))
            expect(classify_response("[No Solution]", markers).kind).to_equal(Kind.UNSOLVABLE)
            expect(classify_response("<unsolvable>", markers).kind).to_equal(Kind.ANSWER)

    with describe("extract_answer"):

        @it("handles nested braces in boxed spans")
        def test_extract_nested():
            expect(extract_answer("so \\boxed{\\frac{1}{2}} done")).to_equal("\\frac{1}{2}")

        @it("prefers whichever span comes last")
        def test_extract_last_span():
            expect(extract_answer("\\boxed{1}\n```\n2\n```")).to_equal("2")
            expect(extract_answer("```\n2\n```\nfinal: \\boxed{3}")).to_equal("3")

        @it("falls back to the last non-empty line")
        def test_extract_last_line():
            expect(extract_answer("work\n  RDRD  \n\n")).to_equal("RDRD")
            expect(extract_answer("")).to_equal("")

    with describe("score"):

        @it("matches the reward table and stays additive")
        def test_score_table():
            config = RewardConfig()
            for (label, kind, correct), (r_acc, r_detect) in SCORE_TABLE.items():
                answer_correct = correct if kind is Kind.ANSWER else None
                partial = score(label, kind, answer_correct, config)
                expect((partial.r_acc, partial.r_detect)).to_equal((r_acc, r_detect), f"{label} {kind}")
                expect(partial.r_acc == 0.0 or partial.r_detect == 0.0).to_be_true()
                for tau, beta in ((0.8, 0.5), (0.5, 0.9)):
                    full = partial.with_calibration(calibration_reward(kind, tau, beta, 1.0))
                    expect(full.total).to_equal(full.r_acc + full.r_detect + full.r_cal)

        @it("requires a correctness flag for answers")
        def test_score_missing_correctness():
            expect(lambda: score(Label.SOLVABLE, Kind.ANSWER, None, RewardConfig())).to_raise(MissingCorrectness)

        @it("validates the config")
        def test_config_validation():
            expect(lambda: RewardConfig(rho=0.1)).to_raise(ValueError)
            expect(lambda: RewardConfig(lam=0.0)).to_raise(ValueError)

    with describe("calibration_reward"):

        @it("promotes refusal below target accuracy")
        def test_calibration_positive():
            expect(calibration_reward(Kind.REFUSAL, 0.8, 0.5, 1.0)).to_be_almost_equal(0.3, 1e-12)

        @it("discourages refusal above target accuracy")
        def test_calibration_negative():
            expect(calibration_reward(Kind.REFUSAL, 0.5, 0.9, 1.0)).to_be_almost_equal(-0.4, 1e-12)

        @it("ignores non-refusals")
        def test_calibration_answer():
            expect(calibration_reward(Kind.ANSWER, 0.8, 0.5, 1.0)).to_equal(0.0)

        @it("is positive exactly when beta is below tau")
        def test_calibration_sign():
            grid = [i / 10 for i in range(11)]
            for tau in grid:
                for beta in grid:
                    for lam in (0.5, 1.0, 2.0):
                        positive = calibration_reward(Kind.REFUSAL, tau, beta, lam) > 0
                        expect(positive).to_equal(beta < tau)

    with describe("group_advantages"):

        @it("normalizes a balanced group to plus and minus one")
        def test_advantages_balanced():
            for got, want in zip(group_advantages([1, 0, 0, 1]), [1, -1, -1, 1]):
                expect(got).to_be_almost_equal(want, 1e-6)

        @it("returns zeros for a constant group")
        def test_advantages_constant():
            for c in (0.5, 3.0, -1.0):
                expect(group_advantages([c, c, c, c])).to_equal([0.0, 0.0, 0.0, 0.0])
            for value in group_advantages([0.7, 0.7, 0.7, 0.7]):
                expect(value).to_be_almost_equal(0.0, 1e-6)

        @it("handles a pair")
        def test_advantages_pair():
            a, b = group_advantages([1, 0], epsilon=1e-8)
            expect(a).to_be_almost_equal(1.0, 1e-6)
            expect(b).to_be_almost_equal(-1.0, 1e-6)

        @it("rejects a group of one")
        def test_advantages_too_small():
            expect(lambda: group_advantages([1.0])).to_raise(GroupTooSmall)

        @it("has zero mean and unit spread on 1000 random groups")
        def test_advantages_random():
            rng = SeededRng(12)
            values = [-0.5, 0.0, 0.2, 1.0]
            for _ in range(1000):
                rewards = [rng.choice(values) for _ in range(rng.randint(2, 16))]
                advantages = np.asarray(group_advantages(rewards))
                expect(abs(advantages.mean())).to_be_between(0.0, 1e-9)
                if len(set(rewards)) > 1:
                    expect(advantages.std()).to_be_between(1 - 1e-6, 1.0)

    with describe("tau schedule"):

        @it("starts at the initial value and ends at the terminal one")
        def test_tau_bounds():
            schedule = TauSchedule(0.3, 0.95, 1000)
            expect(tau_at(0, schedule)).to_equal(0.3)
            expect(tau_at(1000, schedule)).to_equal(0.95)
            expect(tau_at(5000, schedule)).to_equal(0.95)
            expect(tau_at(500, schedule)).to_be_almost_equal(0.625, 1e-12)

        @it("never decreases")
        def test_tau_monotone():
            schedule = TauSchedule(0.1, 1.0, 37)
            values = [schedule.at(s) for s in range(100)]
            expect(all(a <= b for a, b in zip(values, values[1:]))).to_be_true()

        @it("holds still when fixed")
        def test_tau_fixed():
            expect(TauSchedule.fixed(0.5).at(0)).to_equal(0.5)
            expect(TauSchedule.fixed(0.5).at(999)).to_equal(0.5)

        @it("rejects bad parameters")
        def test_tau_invalid():
            expect(lambda: TauSchedule(0.9, 0.5, 10)).to_raise(ValueError)
            expect(lambda: TauSchedule(0.3, 1.2, 10)).to_raise(ValueError)
            expect(lambda: TauSchedule().at(-1)).to_raise(ValueError)

    with describe("decision_threshold"):

        @it("collapses to 1/11 without a penalty")
        def test_threshold_no_penalty():
            expect(decision_threshold(0.1, 0.0)).to_equal(1 / 11)

        @it("relaxes to 0.375 with rho -0.5")
        def test_threshold_penalty():
            expect(decision_threshold(0.1, -0.5)).to_equal(0.375)

        @it("is zero with zero capability and penalty")
        def test_threshold_zero():
            expect(decision_threshold(0.0, 0.0)).to_equal(0.0)

        @it("grows as rho decreases and stays below one")
        def test_threshold_monotone():
            for i in range(11):
                eps = i / 10
                previous = None
                for j in range(21):
                    p = decision_threshold(eps, -j / 10)
                    expect(p).to_be_between(0.0, 0.999999)
                    if previous is not None:
                        expect(p > previous).to_be_true(f"eps={eps} rho={-j / 10}")
                    previous = p

        @it("rejects out-of-range inputs")
        def test_threshold_invalid():
            expect(lambda: decision_threshold(1.5, 0.0)).to_raise(ValueError)
            expect(lambda: decision_threshold(0.1, 0.5)).to_raise(ValueError)

    with describe("grade_group"):

        @it("scores an answer and a false declaration on a Game24 pair")
        def test_grade_game24():
            grade = grade_group(InstanceFactory(), ["4*6", "<unsolvable>"], fixed(0.5), step=0)
            expect(grade.beta).to_equal(0.5)
            totals = [(b.r_acc, b.r_detect, b.r_cal, b.total) for b in grade.breakdowns]
            expect(totals).to_equal([(1.0, 0.0, 0.0, 1.0), (0.0, -0.5, 0.0, -0.5)])

        @it("grades the rest of a group when one response is runaway text")
        def test_grade_runaway_response():
            runaway = "(" * 3000 + "4*6" + ")" * 3000
            grade = grade_group(InstanceFactory(), [runaway, "9" * 5000, "4*6"], fixed(0.5), step=0)
            expect([g.correct for g in grade.graded]).to_equal([False, False, True])

        @it("rewards a correct declaration on unsolvable Hitori")
        def test_grade_hitori():
            grade = grade_group(InstanceFactory.unsolvable_hitori(), ["<unsolvable>"], fixed(0.5), step=0)
            expect(grade.breakdowns[0].total).to_equal(1.0)

        @it("pays only calibration for a refusal on a solvable maze")
        def test_grade_maze_refusal():
            grade = grade_group(InstanceFactory.open_maze(), ["beyond my capabilities"], fixed(0.6), step=3)
            expect(grade.beta).to_equal(0.0)
            expect(grade.tau).to_equal(0.6)
            expect(grade.breakdowns[0].total).to_be_almost_equal(0.6, 1e-12)

        @it("checks maze answers through the domain checker")
        def test_grade_maze_answer():
            grade = grade_group(InstanceFactory.open_maze(), ["RD", "DD"], fixed(0.5), step=0)
            expect([g.correct for g in grade.graded]).to_equal([True, False])

        @it("uses the schedule at the given step")
        def test_grade_step():
            config = RewardConfig(tau=TauSchedule(0.3, 0.95, 1000))
            grade = grade_group(InstanceFactory(), ["beyond my capabilities", "4*6"], config, step=1000)
            expect(grade.tau).to_equal(0.95)
            expect(grade.breakdowns[0].r_cal).to_be_almost_equal(0.45, 1e-12)

        @it("summarizes rates per domain and overall")
        def test_summarize():
            grades = [
                grade_group(InstanceFactory(), ["4*6", "<unsolvable>"], fixed(0.5), step=0),
                grade_group(InstanceFactory.unsolvable_hitori(), ["<unsolvable>", "beyond my capabilities"],
                            fixed(0.5), step=0),
            ]
            report = summarize_grades(grades)
            expect(sorted(report)).to_equal(["game24", "hitori", "overall"])
            expect(report["game24"]["S"]).to_equal(0.5)
            expect(report["hitori"]["U"]).to_equal(0.5)
            expect(report["overall"]["refusal_rate"]).to_equal(0.25)
            expect(report["overall"]["responses"]).to_equal(4)

        @it("refuses domains without a checker")
        def test_grade_unknown_domain():
            from unsolvable import domains
            saved = domains.ADAPTERS.pop(Domain.MATH)
            try:
                instance = InstanceFactory(domain=Domain.MATH)
                expect(lambda: grade_group(instance, ["1"], fixed(0.5), step=0)).to_raise(UnknownDomain)
            finally:
                domains.ADAPTERS[Domain.MATH] = saved
