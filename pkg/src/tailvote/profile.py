"""Model profiles: per-method usage frequency, tail flags, per-model counters.

The profile is the ensemble's cheat sheet. For every API method seen in the
profiling data it records how often the method occurs in ground truths, the
head/tail flag from the cumulative-frequency split, and, per model, how
often the method was recommended and how often that recommendation was
correct (membership in the sample's ground truth, counted per occurrence).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import ApiMethod, PredictionRecord, Sample, normalize_method
from .errors import ConfigError, FormatError

HEAD = "H"
TAIL = "T"


@dataclass
class MethodStats:
    """Recommendation counters of one model for one method."""

    recommendations: int = 0
    correct: int = 0


@dataclass
class ProfileEntry:
    method: ApiMethod
    frequency: int
    tail_flag: str
    per_model: dict[str, MethodStats] = field(default_factory=dict)


@dataclass
class ModelProfile:
    """Per-method ledger for a fixed set of profiled models.

    ``entries`` is keyed by canonical method name and iterates in the
    deterministic profile order (frequency descending, name ascending), so
    two profiles built from the same data serialize identically.
    """

    entries: dict[str, ProfileEntry]
    total_frequency: int
    tail_threshold_p: float
    model_ids: list[str]


def count_frequencies(samples: Sequence[Sample]) -> dict[str, int]:
    """Occurrences (with multiplicity) of every method in every ground truth."""
    if not samples:
        raise ConfigError("cannot profile an empty sample list")
    counts: dict[str, int] = {}
    for sample in samples:
        for method in sample.ground_truth:
            counts[method.canonical] = counts.get(method.canonical, 0) + 1
    return counts


def assign_tail_flags(counts: Mapping[str, int], p: float) -> dict[str, str]:
    """Head/tail split at the cumulative top-p% of frequency mass.

    Methods are walked in descending frequency (ascending name on ties);
    a method is head while the running share, itself included, stays within
    p/100 of the total. Zero-frequency methods are always tail.
    """
    if not 0 < p <= 100:
        raise ConfigError(f"tail threshold p must be in (0, 100], got {p}")
    total = sum(counts.values())
    budget = (p / 100.0) * total
    flags: dict[str, str] = {}
    running = 0
    for name in sorted(counts, key=lambda m: (-counts[m], m)):
        freq = counts[name]
        running += freq
        flags[name] = HEAD if freq > 0 and running <= budget else TAIL
    return flags


def accumulate_model_stats(
    predictions: Sequence[PredictionRecord],
    samples_by_id: Mapping[str, Sample],
) -> dict[str, MethodStats]:
    """Per-method (recommendations, correct) counters for one model's records.

    Correctness is membership-level: each occurrence of a method in a parsed
    prediction counts one recommendation, and counts correct when the method
    appears anywhere in that sample's ground truth.
    """
    stats: dict[str, MethodStats] = {}
    for record in predictions:
        sample = samples_by_id.get(record.sample_id)
        if sample is None:
            raise ConfigError(f"prediction references unknown sample {record.sample_id!r}")
        truth = set(sample.ground_truth.canonicals)
        for method in record.parsed:
            entry = stats.setdefault(method.canonical, MethodStats())
            entry.recommendations += 1
            if method.canonical in truth:
                entry.correct += 1
    return stats


def build_profile(
    samples: Sequence[Sample],
    predictions_by_model: Mapping[str, Sequence[PredictionRecord]],
    p: float = 50.0,
) -> ModelProfile:
    """Build the full profile from a profiling dataset plus model predictions.

    Entries exist for every method seen in any ground truth or any
    prediction; methods seen only in predictions carry frequency 0 and are
    therefore tail. The result is independent of input ordering.
    """
    if not predictions_by_model:
        raise ConfigError("at least one model's predictions are required")
    counts = count_frequencies(samples)
    samples_by_id = {s.sample_id: s for s in samples}

    model_ids = list(predictions_by_model)
    stats_by_model = {
        model_id: accumulate_model_stats(predictions_by_model[model_id], samples_by_id)
        for model_id in model_ids
    }

    full_counts = dict(counts)
    for stats in stats_by_model.values():
        for name in stats:
            full_counts.setdefault(name, 0)
    flags = assign_tail_flags(full_counts, p)

    entries: dict[str, ProfileEntry] = {}
    for name in sorted(full_counts, key=lambda m: (-full_counts[m], m)):
        method = normalize_method(name)
        assert method is not None  # names come from canonical forms
        entries[name] = ProfileEntry(
            method=method,
            frequency=full_counts[name],
            tail_flag=flags[name],
            per_model={
                model_id: stats_by_model[model_id].get(name, MethodStats())
                for model_id in model_ids
            },
        )
    return ModelProfile(
        entries=entries,
        total_frequency=sum(counts.values()),
        tail_threshold_p=float(p),
        model_ids=model_ids,
    )


def method_accuracy(profile: ModelProfile, model_id: str, method: ApiMethod | str) -> float:
    """Profile accuracy rate of one model on one method; 0 when unrecorded."""
    if model_id not in profile.model_ids:
        raise ConfigError(f"model {model_id!r} is not in the profile")
    name = method if isinstance(method, str) else method.canonical
    entry = profile.entries.get(name)
    if entry is None:
        return 0.0
    stats = entry.per_model.get(model_id)
    if stats is None or stats.recommendations == 0:
        return 0.0
    return stats.correct / stats.recommendations


def with_tail_threshold(profile: ModelProfile, p: float) -> ModelProfile:
    """Re-derive tail flags from stored frequencies at a different threshold."""
    if float(p) == profile.tail_threshold_p:
        return profile
    counts = {name: e.frequency for name, e in profile.entries.items()}
    flags = assign_tail_flags(counts, p)
    entries = {
        name: ProfileEntry(e.method, e.frequency, flags[name], e.per_model)
        for name, e in profile.entries.items()
    }
    return ModelProfile(entries, profile.total_frequency, float(p), list(profile.model_ids))


# --------------------------------------------------------------------------- #
# Persistence: header line {"n","p","models"} then one entry per line          #
# --------------------------------------------------------------------------- #

def dump_profile(profile: ModelProfile) -> str:
    lines = [json.dumps({
        "n": profile.total_frequency,
        "p": profile.tail_threshold_p,
        "models": profile.model_ids,
    })]
    for name, entry in profile.entries.items():
        lines.append(json.dumps({
            "method": name,
            "frequency": entry.frequency,
            "tail": entry.tail_flag,
            "stats": {
                model_id: {"rec": stats.recommendations, "correct": stats.correct}
                for model_id, stats in entry.per_model.items()
            },
        }))
    return "\n".join(lines) + "\n"


def save_profile(profile: ModelProfile, path: str | Path) -> None:
    Path(path).write_text(dump_profile(profile), encoding="utf-8", newline="\n")


def load_profile(path: str | Path) -> ModelProfile:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        lines = [line for line in (raw.strip() for raw in fh) if line]
    if not lines:
        raise FormatError(f"{path}: empty profile file")
    try:
        header = json.loads(lines[0])
        total = int(header["n"])
        p = float(header["p"])
        model_ids = [str(m) for m in header["models"]]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise FormatError(f"{path}:1: bad profile header: {exc}") from exc

    entries: dict[str, ProfileEntry] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            obj = json.loads(line)
            name = str(obj["method"])
            frequency = int(obj["frequency"])
            tail_flag = str(obj["tail"])
            stats_raw = obj["stats"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise FormatError(f"{path}:{lineno}: bad profile entry: {exc}") from exc
        if tail_flag not in (HEAD, TAIL):
            raise FormatError(f"{path}:{lineno}: tail flag must be H or T")
        method = normalize_method(name)
        if method is None:
            raise FormatError(f"{path}:{lineno}: not a canonical method: {name!r}")
        entries[name] = ProfileEntry(
            method=method,
            frequency=frequency,
            tail_flag=tail_flag,
            per_model={
                model_id: MethodStats(int(s["rec"]), int(s["correct"]))
                for model_id, s in stats_raw.items()
            },
        )
    ground_total = sum(e.frequency for e in entries.values())
    if ground_total != total:
        raise FormatError(f"{path}: header n={total} but entry frequencies sum to {ground_total}")
    return ModelProfile(entries, total, p, model_ids)
