"""The inference step: gate, gather N candidates, filter, vote, decide.

Per sample the flow is fixed: a tail verdict may reject the input outright;
the configured models' parsed sequences become candidates; a profile-based
filter drops unreliable candidates; exact-equality majority voting looks
for corroborated agreement; and when voting reaches no consensus one of
three fallback rules (simple rejection, reliability-score threshold, best
model) settles the outcome. Every step is pure, so samples can be processed
in parallel with outcomes emitted in input order.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import ApiSequence, PredictionRecord, Sample
from .errors import ConfigError, FormatError
from .profile import HEAD, ModelProfile, method_accuracy
from .tail import TailVerdict

FILTER_NONE = "none"
FILTER_R = "R"
FILTER_H = "H"
FILTER_RH = "RH"
FILTER_KINDS = (FILTER_NONE, FILTER_R, FILTER_H, FILTER_RH)

DECISION_SIMPLE = "simple_rejection"
DECISION_SCORE = "score_based"
DECISION_BEST = "best_model"
DECISION_RULES = (DECISION_SIMPLE, DECISION_SCORE, DECISION_BEST)

STAGE_GATE = "tail_analyzer"
STAGE_FILTER = "filtering"
STAGE_DECISION = "decision"
STAGES = (STAGE_GATE, STAGE_FILTER, STAGE_DECISION)

STATUS_ACCEPTED = "accepted"
STATUS_REJECTED = "rejected"

DECIDED_MAJORITY = "majority"
DECIDED_SCORE = "score"
DECIDED_BEST = "best_model"
DECIDED_SOLE = "sole_candidate"


@dataclass(frozen=True)
class PipelineConfig:
    model_ids: tuple[str, ...]
    filter: str = FILTER_NONE
    decision: str = DECISION_SIMPLE
    theta: float = 0.9
    best_model_id: str | None = None
    use_tail_analyzer: bool = False
    p: float = 50.0

    def __post_init__(self) -> None:
        if not self.model_ids:
            raise ConfigError("at least one model id is required")
        if len(set(self.model_ids)) != len(self.model_ids):
            raise ConfigError("model ids must be distinct")
        if self.filter not in FILTER_KINDS:
            raise ConfigError(f"unknown filter {self.filter!r}; expected one of {FILTER_KINDS}")
        if self.decision not in DECISION_RULES:
            raise ConfigError(f"unknown decision rule {self.decision!r}; expected one of {DECISION_RULES}")
        if not 0.0 <= self.theta <= 1.0:
            raise ConfigError(f"theta must be in [0, 1], got {self.theta}")
        if self.decision == DECISION_BEST:
            if self.best_model_id is None:
                raise ConfigError("best_model decision requires best_model_id")
            if self.best_model_id not in self.model_ids:
                raise ConfigError(f"best_model_id {self.best_model_id!r} is not a configured model")


@dataclass(frozen=True)
class Candidate:
    model_id: str
    sequence: ApiSequence
    survived_filter: bool = False
    score: float | None = None


@dataclass(frozen=True)
class VoteResult:
    winner: ApiSequence | None
    decided_by: str | None  # "majority" or "sole_candidate" when winner set

    @property
    def is_consensus(self) -> bool:
        return self.winner is not None


@dataclass(frozen=True)
class PipelineOutcome:
    sample_id: str
    status: str
    output: ApiSequence | None = None
    rejection_stage: str | None = None
    decided_by: str | None = None
    score: float | None = None

    def __post_init__(self) -> None:
        if self.status == STATUS_ACCEPTED:
            if self.output is None or self.rejection_stage is not None:
                raise ValueError("accepted outcome must carry an output and no stage")
        elif self.status == STATUS_REJECTED:
            if self.output is not None or self.rejection_stage not in STAGES:
                raise ValueError("rejected outcome must carry a stage and no output")
        else:
            raise ValueError(f"unknown outcome status {self.status!r}")

    @property
    def accepted(self) -> bool:
        return self.status == STATUS_ACCEPTED


def apply_filter(
    candidates: Sequence[Candidate],
    profile: ModelProfile,
    kind: str,
) -> list[Candidate]:
    """Mark each candidate's survival under the configured filter.

    R requires every method to be recorded in the profile; H requires every
    method to be recorded with a head flag (an unrecorded method has no head
    flag, so it fails H); RH requires both. Empty sequences fail every
    filter except "none" — vacuous reliability is rejected.
    """
    if kind not in FILTER_KINDS:
        raise ConfigError(f"unknown filter {kind!r}")
    out: list[Candidate] = []
    for candidate in candidates:
        if kind == FILTER_NONE:
            out.append(replace(candidate, survived_filter=True))
            continue
        survives = len(candidate.sequence) > 0
        for method in candidate.sequence:
            entry = profile.entries.get(method.canonical)
            if entry is None:
                survives = False
                break
            if kind in (FILTER_H, FILTER_RH) and entry.tail_flag != HEAD:
                survives = False
                break
        out.append(replace(candidate, survived_filter=survives))
    return out


def majority_vote(survivors: Sequence[Candidate], configured_n: int) -> VoteResult:
    """Exact-equality vote over the surviving candidates.

    A sequence wins when its group is larger than half the survivors and
    holds at least two candidates: agreement is the corroboration this
    system trusts, so an uncorroborated lone survivor falls through to the
    decision rule. The single-model configuration is the exception — its
    sole surviving candidate is accepted as-is.
    """
    if configured_n == 1:
        if len(survivors) == 1:
            return VoteResult(survivors[0].sequence, DECIDED_SOLE)
        return VoteResult(None, None)
    groups: dict[ApiSequence, int] = {}
    for candidate in survivors:
        groups[candidate.sequence] = groups.get(candidate.sequence, 0) + 1
    k = len(survivors)
    for sequence, size in groups.items():
        if size >= 2 and size * 2 > k:
            return VoteResult(sequence, DECIDED_MAJORITY)
    return VoteResult(None, None)


def reliability_score(sequence: ApiSequence, model_id: str, profile: ModelProfile) -> float:
    """Geometric mean of the model's per-method profile accuracy rates.

    Computed in log space; any zero factor (a method the model never got
    right) makes the whole score zero, and an empty sequence scores zero.
    """
    if model_id not in profile.model_ids:
        raise ConfigError(f"model {model_id!r} is not in the profile")
    if len(sequence) == 0:
        return 0.0
    log_sum = 0.0
    for method in sequence:
        rate = method_accuracy(profile, model_id, method)
        if rate == 0.0:
            return 0.0
        log_sum += math.log(rate)
    return math.exp(log_sum / len(sequence))


@dataclass(frozen=True)
class Decision:
    status: str
    output: ApiSequence | None = None
    decided_by: str | None = None
    score: float | None = None


def decide(
    survivors: Sequence[Candidate],
    vote_result: VoteResult,
    config: PipelineConfig,
    profile: ModelProfile,
) -> Decision:
    """Turn the vote result (or its absence) into an accept/reject decision."""
    if vote_result.is_consensus:
        return Decision(STATUS_ACCEPTED, vote_result.winner, vote_result.decided_by)

    if config.decision == DECISION_SIMPLE:
        return Decision(STATUS_REJECTED)

    if config.decision == DECISION_SCORE:
        best: Candidate | None = None
        best_score = -1.0
        for model_id in config.model_ids:  # config order breaks score ties
            for candidate in survivors:
                if candidate.model_id != model_id:
                    continue
                score = reliability_score(candidate.sequence, model_id, profile)
                if score > best_score:
                    best, best_score = candidate, score
        if best is not None and best_score >= config.theta:
            return Decision(STATUS_ACCEPTED, best.sequence, DECIDED_SCORE, best_score)
        return Decision(STATUS_REJECTED)

    # best_model: only that model's surviving candidate can be adopted,
    # and only when its own score clears the threshold.
    for candidate in survivors:
        if candidate.model_id == config.best_model_id:
            score = reliability_score(candidate.sequence, candidate.model_id, profile)
            if score >= config.theta:
                return Decision(STATUS_ACCEPTED, candidate.sequence, DECIDED_BEST, score)
            break
    return Decision(STATUS_REJECTED)


def run_pipeline(
    sample: Sample,
    predictions: Mapping[str, PredictionRecord],
    config: PipelineConfig,
    profile: ModelProfile,
    verdict: TailVerdict | None = None,
) -> PipelineOutcome:
    """Run the full inference step for one sample.

    ``predictions`` maps model id to that model's record for this sample; a
    missing record degrades to an empty-sequence candidate, which every
    filter rejects. ``verdict`` is required when the tail gate is enabled.
    """
    if config.use_tail_analyzer:
        if verdict is None:
            raise ConfigError(f"tail gate enabled but no verdict for sample {sample.sample_id!r}")
        if verdict.is_tail:
            return PipelineOutcome(sample.sample_id, STATUS_REJECTED, rejection_stage=STAGE_GATE)

    candidates = []
    for model_id in config.model_ids:
        record = predictions.get(model_id)
        sequence = record.parsed if record is not None else ApiSequence()
        candidates.append(Candidate(model_id, sequence))

    filtered = apply_filter(candidates, profile, config.filter)
    survivors = [c for c in filtered if c.survived_filter]
    if not survivors:
        return PipelineOutcome(sample.sample_id, STATUS_REJECTED, rejection_stage=STAGE_FILTER)

    vote_result = majority_vote(survivors, configured_n=len(config.model_ids))
    decision = decide(survivors, vote_result, config, profile)
    if decision.status == STATUS_ACCEPTED:
        return PipelineOutcome(
            sample.sample_id, STATUS_ACCEPTED,
            output=decision.output, decided_by=decision.decided_by, score=decision.score,
        )
    return PipelineOutcome(sample.sample_id, STATUS_REJECTED, rejection_stage=STAGE_DECISION)


def run_dataset(
    samples: Sequence[Sample],
    predictions_by_model: Mapping[str, Mapping[str, PredictionRecord]],
    config: PipelineConfig,
    profile: ModelProfile,
    verdicts_by_id: Mapping[str, TailVerdict] | None = None,
    workers: int = 1,
) -> list[PipelineOutcome]:
    """Run the pipeline over a dataset, outcomes in input order.

    ``predictions_by_model`` maps model id -> {sample id -> record}. The
    per-sample work is pure, so any worker count yields identical output.
    """
    verdicts_by_id = verdicts_by_id or {}

    def one(sample: Sample) -> PipelineOutcome:
        per_sample = {
            model_id: records[sample.sample_id]
            for model_id, records in predictions_by_model.items()
            if sample.sample_id in records
        }
        return run_pipeline(sample, per_sample, config, profile, verdicts_by_id.get(sample.sample_id))

    if workers <= 1:
        return [one(s) for s in samples]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, samples, chunksize=64))


def index_predictions(records: Iterable[PredictionRecord]) -> dict[str, PredictionRecord]:
    return {r.sample_id: r for r in records}


# --------------------------------------------------------------------------- #
# Outcome wire format                                                          #
# --------------------------------------------------------------------------- #

def outcome_to_dict(outcome: PipelineOutcome) -> dict:
    return {
        "id": outcome.sample_id,
        "status": outcome.status,
        "output": list(outcome.output.canonicals) if outcome.output is not None else None,
        "stage": outcome.rejection_stage,
        "decided_by": outcome.decided_by,
        "score": outcome.score,
    }


def dump_outcomes(outcomes: Iterable[PipelineOutcome]) -> str:
    return "".join(json.dumps(outcome_to_dict(o)) + "\n" for o in outcomes)


def write_outcomes(outcomes: Iterable[PipelineOutcome], path: str | Path) -> None:
    Path(path).write_text(dump_outcomes(outcomes), encoding="utf-8", newline="\n")


def load_outcomes(path: str | Path) -> list[PipelineOutcome]:
    path = Path(path)
    outcomes: list[PipelineOutcome] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                output_raw = obj["output"]
                output = (
                    ApiSequence.from_canonicals(output_raw) if output_raw is not None else None
                )
                outcomes.append(PipelineOutcome(
                    sample_id=str(obj["id"]),
                    status=str(obj["status"]),
                    output=output,
                    rejection_stage=obj["stage"],
                    decided_by=obj["decided_by"],
                    score=obj["score"],
                ))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"{path}:{lineno}: bad outcome line: {exc}") from exc
    return outcomes
