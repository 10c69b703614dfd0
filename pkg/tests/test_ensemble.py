"""Filters, voting, decision rules, and the per-sample pipeline."""

from __future__ import annotations

import itertools
import math
import random

import pytest

from tailvote import (
    Candidate,
    ConfigError,
    PipelineConfig,
    apply_filter,
    decide,
    majority_vote,
    parse_api_sequence,
    reliability_score,
    run_dataset,
    run_pipeline,
)
from tailvote.corpus import ApiSequence
from tailvote.ensemble import (
    DECIDED_BEST,
    DECIDED_MAJORITY,
    DECIDED_SCORE,
    DECIDED_SOLE,
    STAGE_DECISION,
    STAGE_FILTER,
    STAGE_GATE,
    STATUS_ACCEPTED,
    STATUS_REJECTED,
    VoteResult,
    dump_outcomes,
    index_predictions,
    load_outcomes,
    write_outcomes,
)
from tailvote.profile import MethodStats
from tailvote.tail import SOURCE_EXTERNAL, TailVerdict

from conftest import make_prediction, make_profile, make_sample
from oracles import oracle_vote, reference_pipeline

SEQ_A = parse_api_sequence("A.x B.y")
SEQ_B = parse_api_sequence("B.y C.z")
SEQ_C = parse_api_sequence("C.z")
EMPTY = ApiSequence()


def default_profile():
    return make_profile(["m1", "m2", "m3"], {
        "A.x": (10, "H", {"m1": (10, 9), "m2": (8, 8), "m3": (5, 1)}),
        "B.y": (5, "H", {"m1": (4, 4), "m2": (6, 3), "m3": (2, 0)}),
        "C.z": (1, "T", {"m1": (1, 1), "m2": (0, 0), "m3": (3, 3)}),
    })


class TestApplyFilter:
    def test_none_keeps_everything(self):
        candidates = [Candidate("m1", SEQ_A), Candidate("m2", SEQ_C), Candidate("m3", EMPTY)]
        out = apply_filter(candidates, default_profile(), "none")
        assert all(c.survived_filter for c in out)

    def test_recorded_filter(self):
        prof = default_profile()
        ghost = parse_api_sequence("A.x Ghost.m")
        out = apply_filter([Candidate("m1", SEQ_A), Candidate("m2", ghost)], prof, "R")
        assert [c.survived_filter for c in out] == [True, False]

    def test_tail_method_fails_head_filter(self):
        out = apply_filter([Candidate("m1", SEQ_C)], default_profile(), "H")
        assert out[0].survived_filter is False

    def test_unrecorded_method_fails_head_filter(self):
        ghost = parse_api_sequence("Ghost.m")
        out = apply_filter([Candidate("m1", ghost)], default_profile(), "H")
        assert out[0].survived_filter is False

    @pytest.mark.parametrize("kind", ["R", "H", "RH"])
    def test_empty_sequence_fails(self, kind):
        out = apply_filter([Candidate("m1", EMPTY)], default_profile(), kind)
        assert out[0].survived_filter is False

    def test_rh_is_intersection_randomized(self):
        # survivors(RH) == survivors(R) & survivors(H), 1000 randomized cases
        rng = random.Random(31337)
        pool = [f"C{i}.m" for i in range(12)]
        for _ in range(1000):
            flagged = {m: (rng.randint(0, 6), rng.choice("HT"), {}) for m in rng.sample(pool, 8)}
            prof = make_profile(["m1"], flagged)
            candidates = []
            for j in range(rng.randint(1, 5)):
                methods = rng.sample(pool, rng.randint(0, 4))
                candidates.append(Candidate("m1", parse_api_sequence(" ".join(methods))))
            surv = {
                kind: {i for i, c in enumerate(apply_filter(candidates, prof, kind)) if c.survived_filter}
                for kind in ("R", "H", "RH")
            }
            assert surv["RH"] == surv["R"] & surv["H"]


class TestMajorityVote:
    def test_strict_majority(self):
        survivors = [Candidate("m1", SEQ_A), Candidate("m2", SEQ_A), Candidate("m3", SEQ_B)]
        result = majority_vote(survivors, 3)
        assert result.winner == SEQ_A
        assert result.decided_by == DECIDED_MAJORITY

    def test_all_distinct_no_consensus(self):
        survivors = [Candidate("m1", SEQ_A), Candidate("m2", SEQ_B), Candidate("m3", SEQ_C)]
        assert majority_vote(survivors, 3).winner is None

    def test_two_two_one_no_consensus(self):
        survivors = [
            Candidate("m1", SEQ_A), Candidate("m2", SEQ_A),
            Candidate("m3", SEQ_B), Candidate("m4", SEQ_B), Candidate("m5", SEQ_C),
        ]
        assert majority_vote(survivors, 5).winner is None  # 2 <= 5/2

    def test_single_survivor_with_multiple_models(self):
        assert majority_vote([Candidate("m1", SEQ_A)], 3).winner is None

    def test_sole_candidate_single_model(self):
        result = majority_vote([Candidate("m1", SEQ_A)], 1)
        assert result.winner == SEQ_A
        assert result.decided_by == DECIDED_SOLE

    def test_exhaustive_against_enumeration_oracle(self):
        # all multisets of up to 5 sequences drawn from 3 distinct values
        values = [SEQ_A, SEQ_B, SEQ_C]
        plain = {SEQ_A: "a", SEQ_B: "b", SEQ_C: "c"}
        for k in range(0, 6):
            for combo in itertools.product(range(3), repeat=k):
                survivors = [Candidate(f"m{i}", values[v]) for i, v in enumerate(combo)]
                for n in (1, max(2, k)):
                    got = majority_vote(survivors, n)
                    want = oracle_vote([tuple(plain[values[v]]) for v in combo], n)
                    got_plain = tuple(plain[got.winner]) if got.winner is not None else None
                    assert got_plain == want

    def test_order_invariance(self):
        rng = random.Random(8)
        values = [SEQ_A, SEQ_B, SEQ_C, EMPTY]
        for _ in range(200):
            seqs = [rng.choice(values) for _ in range(rng.randint(2, 5))]
            survivors = [Candidate(f"m{i}", s) for i, s in enumerate(seqs)]
            baseline = majority_vote(survivors, len(survivors)).winner
            shuffled = survivors[:]
            rng.shuffle(shuffled)
            assert majority_vote(shuffled, len(shuffled)).winner == baseline


class TestReliabilityScore:
    def test_all_ones_is_exactly_one(self):
        prof = make_profile(["m1"], {
            "A.x": (5, "H", {"m1": (7, 7)}),
            "B.y": (5, "H", {"m1": (3, 3)}),
        })
        assert reliability_score(SEQ_A, "m1", prof) == 1.0

    def test_zero_factor_is_exactly_zero(self):
        prof = make_profile(["m1"], {
            "A.x": (5, "H", {"m1": (7, 7)}),
            "B.y": (5, "H", {"m1": (3, 0)}),
        })
        assert reliability_score(SEQ_A, "m1", prof) == 0.0

    def test_closed_forms(self):
        prof = make_profile(["m1"], {
            "A.x": (5, "H", {"m1": (2, 1)}),    # 0.5
            "B.y": (5, "H", {"m1": (2, 1)}),    # 0.5
        })
        assert reliability_score(SEQ_A, "m1", prof) == pytest.approx(0.5)
        prof2 = make_profile(["m1"], {
            "A.x": (5, "H", {"m1": (10, 9)}),   # 0.9
            "B.y": (5, "H", {"m1": (10, 4)}),   # 0.4
        })
        assert reliability_score(SEQ_A, "m1", prof2) == pytest.approx(math.sqrt(0.36))

    def test_matches_log_space_recomputation(self):
        rng = random.Random(17)
        for _ in range(200):
            table = {}
            methods = []
            for i in range(rng.randint(1, 6)):
                rec = rng.randint(1, 50)
                cor = rng.randint(1, rec)
                table[f"C{i}.m"] = (rng.randint(0, 9), "H", {"m1": (rec, cor)})
                methods.append(f"C{i}.m")
            prof = make_profile(["m1"], table)
            seq = parse_api_sequence(" ".join(methods))
            rates = [table[m][2]["m1"][1] / table[m][2]["m1"][0] for m in methods]
            expected = math.exp(sum(math.log(r) for r in rates) / len(rates))
            assert abs(reliability_score(seq, "m1", prof) - expected) < 1e-9

    def test_empty_sequence_scores_zero(self):
        assert reliability_score(EMPTY, "m1", default_profile()) == 0.0

    def test_unknown_model(self):
        with pytest.raises(ConfigError):
            reliability_score(SEQ_A, "zz", default_profile())


class TestDecide:
    def _config(self, decision, theta=0.9, best=None):
        return PipelineConfig(
            model_ids=("m1", "m2", "m3"), decision=decision, theta=theta,
            best_model_id=best if decision == "best_model" else None,
        )

    def test_consensus_wins_regardless_of_rule(self):
        vote = VoteResult(SEQ_A, DECIDED_MAJORITY)
        d = decide([], vote, self._config("simple_rejection"), default_profile())
        assert d.status == STATUS_ACCEPTED and d.decided_by == DECIDED_MAJORITY

    def test_simple_rejection(self):
        d = decide([Candidate("m1", SEQ_A)], VoteResult(None, None),
                   self._config("simple_rejection"), default_profile())
        assert d.status == STATUS_REJECTED

    def test_score_based_accepts_above_theta(self):
        prof = make_profile(["m1", "m2", "m3"], {
            "A.x": (5, "H", {"m1": (20, 19)}),
            "B.y": (5, "H", {"m1": (20, 19)}),
        })
        survivors = [Candidate("m1", SEQ_A)]
        d = decide(survivors, VoteResult(None, None), self._config("score_based"), prof)
        assert d.status == STATUS_ACCEPTED
        assert d.decided_by == DECIDED_SCORE
        assert d.score == pytest.approx(0.95)

    def test_score_based_rejects_below_theta(self):
        d = decide([Candidate("m3", SEQ_A)], VoteResult(None, None),
                   self._config("score_based"), default_profile())
        assert d.status == STATUS_REJECTED

    def test_score_tie_broken_by_model_order(self):
        prof = make_profile(["m1", "m2", "m3"], {
            "A.x": (5, "H", {"m1": (4, 4), "m2": (9, 9)}),
            "B.y": (5, "H", {"m2": (9, 9)}),
        })
        survivors = [Candidate("m2", SEQ_B), Candidate("m1", parse_api_sequence("A.x"))]
        # both score 0... m2's B.y C.z: C.z unrecorded -> 0; craft equal scores instead
        prof = make_profile(["m1", "m2", "m3"], {
            "A.x": (5, "H", {"m1": (2, 2), "m2": (5, 5)}),
        })
        seq = parse_api_sequence("A.x")
        survivors = [Candidate("m2", seq), Candidate("m1", seq)]
        d = decide(survivors, VoteResult(None, None), self._config("score_based", theta=0.5), prof)
        assert d.status == STATUS_ACCEPTED
        # both candidates score 1.0; m1 precedes m2 in configured order
        assert d.output == seq and d.decided_by == DECIDED_SCORE

    def test_best_model_missing_candidate_rejects(self):
        survivors = [Candidate("m1", SEQ_A), Candidate("m3", SEQ_B)]
        d = decide(survivors, VoteResult(None, None),
                   self._config("best_model", best="m2"), default_profile())
        assert d.status == STATUS_REJECTED

    def test_best_model_accepts_at_threshold(self):
        prof = make_profile(["m1", "m2", "m3"], {
            "A.x": (5, "H", {"m2": (10, 9)}),
            "B.y": (5, "H", {"m2": (10, 9)}),
        })
        survivors = [Candidate("m2", SEQ_A)]
        d = decide(survivors, VoteResult(None, None),
                   self._config("best_model", theta=0.9, best="m2"), prof)
        assert d.status == STATUS_ACCEPTED
        assert d.decided_by == DECIDED_BEST
        assert d.score == pytest.approx(0.9)

    def test_theta_monotone_rejection(self):
        # raising theta never converts a rejection into an acceptance
        rng = random.Random(5)
        for decision in ("score_based", "best_model"):
            for _ in range(100):
                table = {}
                for i in range(4):
                    rec = rng.randint(1, 10)
                    table[f"C{i}.m"] = (5, "H", {
                        "m1": (rec, rng.randint(0, rec)),
                        "m2": (rec, rng.randint(0, rec)),
                    })
                prof = make_profile(["m1", "m2"], table)
                survivors = [
                    Candidate(m, parse_api_sequence(" ".join(
                        rng.sample(sorted(table), rng.randint(1, 3)))))
                    for m in ("m1", "m2")
                ]
                accepted_at = []
                for theta in (0.1, 0.5, 0.9):
                    config = PipelineConfig(
                        model_ids=("m1", "m2"), decision=decision, theta=theta,
                        best_model_id="m1" if decision == "best_model" else None,
                    )
                    d = decide(survivors, VoteResult(None, None), config, prof)
                    accepted_at.append(d.status == STATUS_ACCEPTED)
                # once rejected at a lower theta, stays rejected at higher
                for lo, hi in zip(accepted_at, accepted_at[1:]):
                    assert lo or not hi

    def test_best_model_requires_id(self):
        with pytest.raises(ConfigError):
            PipelineConfig(model_ids=("m1",), decision="best_model")


class TestRunPipeline:
    def _verdict(self, sample_id, tail):
        return TailVerdict(sample_id, tail, SOURCE_EXTERNAL)

    def test_tail_verdict_short_circuits(self):
        sample = make_sample(0, "A.x")
        config = PipelineConfig(model_ids=("m1",), use_tail_analyzer=True)
        outcome = run_pipeline(sample, {}, config, default_profile(), self._verdict("s0", True))
        assert outcome.status == STATUS_REJECTED
        assert outcome.rejection_stage == STAGE_GATE

    def test_gate_requires_verdict(self):
        sample = make_sample(0, "A.x")
        config = PipelineConfig(model_ids=("m1",), use_tail_analyzer=True)
        with pytest.raises(ConfigError):
            run_pipeline(sample, {}, config, default_profile(), None)

    def test_unanimous_all_head_accepted(self):
        sample = make_sample(0, "A.x B.y")
        preds = {m: make_prediction("s0", m, "A.x B.y") for m in ("m1", "m2", "m3")}
        config = PipelineConfig(model_ids=("m1", "m2", "m3"), filter="H")
        outcome = run_pipeline(sample, preds, config, default_profile())
        assert outcome.status == STATUS_ACCEPTED
        assert outcome.decided_by == DECIDED_MAJORITY
        assert outcome.output == SEQ_A

    def test_all_filtered_rejected_at_filtering(self):
        sample = make_sample(0, "A.x")
        preds = {m: make_prediction("s0", m, "C.z") for m in ("m1", "m2", "m3")}
        config = PipelineConfig(model_ids=("m1", "m2", "m3"), filter="H")
        outcome = run_pipeline(sample, preds, config, default_profile())
        assert outcome.rejection_stage == STAGE_FILTER

    def test_missing_prediction_is_empty_candidate(self):
        sample = make_sample(0, "A.x")
        preds = {"m1": make_prediction("s0", "m1", "A.x"), "m2": make_prediction("s0", "m2", "A.x")}
        config = PipelineConfig(model_ids=("m1", "m2", "m3"), filter="none")
        outcome = run_pipeline(sample, preds, config, default_profile())
        # m3 degrades to an empty candidate; the two real ones agree
        assert outcome.status == STATUS_ACCEPTED
        assert outcome.output == parse_api_sequence("A.x")

    def test_no_consensus_simple_rejection(self):
        sample = make_sample(0, "A.x")
        preds = {
            "m1": make_prediction("s0", "m1", "A.x"),
            "m2": make_prediction("s0", "m2", "B.y"),
            "m3": make_prediction("s0", "m3", "C.z"),
        }
        config = PipelineConfig(model_ids=("m1", "m2", "m3"), filter="none")
        outcome = run_pipeline(sample, preds, config, default_profile())
        assert outcome.rejection_stage == STAGE_DECISION

    def test_single_model_always_accepts_without_gate_or_filter(self):
        config = PipelineConfig(model_ids=("m1",), filter="none")
        for i, out in enumerate(["A.x", "junk no dots", "C.z C.z"]):
            sample = make_sample(i, "A.x")
            preds = {"m1": make_prediction(f"s{i}", "m1", out)}
            outcome = run_pipeline(sample, preds, config, default_profile())
            assert outcome.status == STATUS_ACCEPTED
            assert outcome.decided_by == DECIDED_SOLE
            assert outcome.output == parse_api_sequence(out)


class TestRunDataset:
    def _setup(self, n=40):
        rng = random.Random(13)
        samples = [make_sample(i, rng.choice(["A.x B.y", "A.x", "C.z"])) for i in range(n)]
        preds = {}
        for m in ("m1", "m2", "m3"):
            recs = []
            for s in samples:
                out = s.ground_truth.to_text() if rng.random() < 0.7 else "B.y"
                recs.append(make_prediction(s.sample_id, m, out))
            preds[m] = index_predictions(recs)
        config = PipelineConfig(model_ids=("m1", "m2", "m3"), filter="R")
        return samples, preds, config

    def test_outcomes_in_input_order(self):
        samples, preds, config = self._setup()
        outcomes = run_dataset(samples, preds, config, default_profile())
        assert [o.sample_id for o in outcomes] == [s.sample_id for s in samples]

    def test_worker_count_invariance(self):
        samples, preds, config = self._setup()
        sequential = run_dataset(samples, preds, config, default_profile(), workers=1)
        threaded = run_dataset(samples, preds, config, default_profile(), workers=4)
        assert dump_outcomes(sequential) == dump_outcomes(threaded)


class TestOutcomeWireFormat:
    def test_round_trip(self, tmp_path):
        samples, preds, config = TestRunDataset()._setup(10)
        outcomes = run_dataset(samples, preds, config, default_profile())
        path = tmp_path / "outcomes.jsonl"
        write_outcomes(outcomes, path)
        assert load_outcomes(path) == outcomes


class TestReferenceEquivalence:
    def test_matches_straight_line_reference(self):
        # randomized 3-model runs across every filter and decision rule
        rng = random.Random(2718)
        pool = [f"C{i}.m" for i in range(10)]
        model_ids = ["m1", "m2", "m3"]
        for trial in range(150):
            table = {}
            for m in rng.sample(pool, 7):
                rec = rng.randint(0, 8)
                table[m] = (rng.randint(0, 5), rng.choice("HT"),
                            {mid: (rec, rng.randint(0, rec) if rec else 0) for mid in model_ids})
            prof = make_profile(model_ids, table)
            flags = {m: table[m][1] for m in table}
            recorded = set(table)
            accuracy = {}
            for m in table:
                for mid in model_ids:
                    rec, cor = table[m][2][mid]
                    accuracy[(mid, m)] = cor / rec if rec else 0.0

            truth = " ".join(rng.sample(pool, rng.randint(1, 3)))
            sample = make_sample(trial, truth, label=rng.randint(0, 1))
            candidate_texts = {
                mid: " ".join(rng.sample(pool, rng.randint(0, 3))) for mid in model_ids
            }
            preds = {mid: make_prediction(sample.sample_id, mid, text)
                     for mid, text in candidate_texts.items()}

            for filt in ("none", "R", "H", "RH"):
                for decision in ("simple_rejection", "score_based", "best_model"):
                    for use_gate in (False, True):
                        config = PipelineConfig(
                            model_ids=tuple(model_ids), filter=filt, decision=decision,
                            theta=0.6, best_model_id="m2" if decision == "best_model" else None,
                            use_tail_analyzer=use_gate,
                        )
                        verdict = TailVerdict(sample.sample_id, bool(sample.tail_label), SOURCE_EXTERNAL)
                        got = run_pipeline(sample, preds, config, prof, verdict)
                        want = reference_pipeline(
                            tuple(sample.ground_truth.canonicals),
                            [(mid, tuple(preds[mid].parsed.canonicals)) for mid in model_ids],
                            flags=flags, recorded=recorded, accuracy=accuracy,
                            filter_kind=filt, decision=decision, theta=0.6,
                            best_model="m2", use_gate=use_gate,
                            is_tail=bool(sample.tail_label), model_order=model_ids,
                        )
                        assert got.status == want["status"]
                        got_output = list(got.output.canonicals) if got.output is not None else None
                        assert got_output == want["output"]
                        assert got.rejection_stage == want["stage"]
                        assert got.decided_by == want["decided_by"]
