"""Reliability metrics over an outcome stream: TAR, RR, FRR.

TAR is exact-match accuracy among accepted outputs; RR is the share of
inputs the system refused to answer; FRR is, among rejections, the share
whose counterfactual output would have been correct. The counterfactual is
by default the unfiltered majority vote over the raw candidates — what the
ensemble would have said with no gate and no filter — with an any-model
diagnostic mode for analysis.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus import ApiSequence, Sample
from .ensemble import (
    Candidate,
    PipelineOutcome,
    STAGES,
    STATUS_ACCEPTED,
    majority_vote,
)
from .errors import ConfigError

POLICY_UNFILTERED_MAJORITY = "unfiltered_majority"
POLICY_ANY_MODEL_CORRECT = "any_model_correct"
POLICIES = (POLICY_UNFILTERED_MAJORITY, POLICY_ANY_MODEL_CORRECT)


@dataclass(frozen=True)
class EvaluationReport:
    total_inputs: int
    total_outputs: int
    correct_outputs: int
    rejected: int
    rejected_correct: int
    tar: float | None  # null when nothing was accepted
    rr: float
    frr: float | None  # null when nothing was rejected
    per_stage_rejections: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "total_inputs": self.total_inputs,
            "total_outputs": self.total_outputs,
            "correct_outputs": self.correct_outputs,
            "rejected": self.rejected,
            "rejected_correct": self.rejected_correct,
            "tar": self.tar,
            "rr": self.rr,
            "frr": self.frr,
            "per_stage_rejections": dict(self.per_stage_rejections),
        }


def score_outcome(outcome: PipelineOutcome, sample: Sample) -> bool:
    """An accepted outcome is correct iff it equals the ground truth exactly."""
    if outcome.sample_id != sample.sample_id:
        raise ConfigError(
            f"outcome {outcome.sample_id!r} scored against sample {sample.sample_id!r}"
        )
    return outcome.accepted and outcome.output == sample.ground_truth


def counterfactual_correct(
    sample: Sample,
    raw_candidates: Sequence[ApiSequence],
    policy: str = POLICY_UNFILTERED_MAJORITY,
    configured_n: int | None = None,
) -> bool:
    """Would this rejected input have yielded a correct recommendation?

    Under the default policy the raw (unfiltered) candidates are put through
    the same majority rule; in the single-model configuration the sole raw
    candidate itself is the counterfactual output. The any-model mode flags
    any sample where some candidate matches.
    """
    if policy not in POLICIES:
        raise ConfigError(f"unknown counterfactual policy {policy!r}")
    if configured_n is None:
        configured_n = len(raw_candidates)
    if policy == POLICY_ANY_MODEL_CORRECT:
        return any(seq == sample.ground_truth for seq in raw_candidates)
    candidates = [Candidate(f"m{i}", seq, survived_filter=True) for i, seq in enumerate(raw_candidates)]
    vote = majority_vote(candidates, configured_n)
    return vote.winner is not None and vote.winner == sample.ground_truth


def compute_report(
    outcomes: Sequence[PipelineOutcome],
    samples: Sequence[Sample],
    raw_candidates_by_id: Mapping[str, Sequence[ApiSequence]],
    policy: str = POLICY_UNFILTERED_MAJORITY,
) -> EvaluationReport:
    """Aggregate an outcome stream into the reliability report.

    Requires exactly one outcome per sample; ``raw_candidates_by_id`` holds
    each sample's unfiltered candidate sequences in configured model order
    (used only for rejected samples).
    """
    if not outcomes:
        raise ConfigError("cannot evaluate an empty outcome stream")
    samples_by_id = {s.sample_id: s for s in samples}
    if len(outcomes) != len(samples_by_id):
        raise ConfigError(
            f"{len(outcomes)} outcomes for {len(samples_by_id)} samples; need exactly one each"
        )

    total = len(outcomes)
    outputs = 0
    correct = 0
    rejected_correct = 0
    per_stage = {stage: 0 for stage in STAGES}
    seen: set[str] = set()
    for outcome in outcomes:
        sample = samples_by_id.get(outcome.sample_id)
        if sample is None:
            raise ConfigError(f"outcome references unknown sample {outcome.sample_id!r}")
        if outcome.sample_id in seen:
            raise ConfigError(f"duplicate outcome for sample {outcome.sample_id!r}")
        seen.add(outcome.sample_id)
        if outcome.status == STATUS_ACCEPTED:
            outputs += 1
            if score_outcome(outcome, sample):
                correct += 1
        else:
            per_stage[outcome.rejection_stage] += 1
            raw = raw_candidates_by_id.get(outcome.sample_id, ())
            if counterfactual_correct(sample, raw, policy):
                rejected_correct += 1

    rejected = total - outputs
    return EvaluationReport(
        total_inputs=total,
        total_outputs=outputs,
        correct_outputs=correct,
        rejected=rejected,
        rejected_correct=rejected_correct,
        tar=correct / outputs if outputs else None,
        rr=1.0 - outputs / total,
        frr=rejected_correct / rejected if rejected else None,
        per_stage_rejections=per_stage,
    )


# --------------------------------------------------------------------------- #
# Rendering                                                                    #
# --------------------------------------------------------------------------- #

def format_rate(rate: float | None) -> str:
    """Rate as a percentage string with one decimal; '-' when undefined."""
    return "-" if rate is None else f"{100.0 * rate:.1f}"


def render_table(rows: Sequence[tuple[str, str, EvaluationReport]]) -> str:
    """Aligned text table with columns Filter, Decision Rule, TAR, RR, FRR."""
    header = ("Filter", "Decision Rule", "TAR (%)", "RR (%)", "FRR (%)")
    body = [
        (filt, decision, format_rate(r.tar), format_rate(r.rr), format_rate(r.frr))
        for filt, decision, r in rows
    ]
    widths = [max(len(row[i]) for row in [header, *body]) for i in range(5)]
    lines = []
    for row in [header, *body]:
        left = [row[i].ljust(widths[i]) for i in range(2)]
        right = [row[i].rjust(widths[i]) for i in range(2, 5)]
        lines.append("  ".join(left + right).rstrip())
    lines.insert(1, "-" * max(len(line) for line in lines))
    return "\n".join(lines) + "\n"


def report_to_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"
