"""Shared helpers for building in-memory corpora."""

from __future__ import annotations

import random

from tailvote import parse_api_sequence
from tailvote.corpus import PredictionRecord, Sample


def make_sample(i: int, truth: str, label: int | None = None, query: str = "", context: str = "") -> Sample:
    return Sample(
        sample_id=f"s{i}",
        query=query or f"query {i}",
        context=context or f"void f{i}() {{}}",
        ground_truth=parse_api_sequence(truth),
        tail_label=label,
    )


def make_prediction(sample_id: str, model_id: str, output: str) -> PredictionRecord:
    return PredictionRecord(sample_id, model_id, output, parse_api_sequence(output))


def random_canonical(rng: random.Random, pool_size: int = 30) -> str:
    i = rng.randrange(pool_size)
    return f"C{i}.m{i}"


def make_profile(model_ids: list[str], table: dict) -> "ModelProfile":
    """Profile from {canonical: (frequency, flag, {model: (rec, correct)})}."""
    from tailvote.corpus import normalize_method
    from tailvote.profile import MethodStats, ModelProfile, ProfileEntry

    entries = {}
    for name in sorted(table, key=lambda m: (-table[m][0], m)):
        frequency, flag, stats = table[name]
        method = normalize_method(name)
        assert method is not None
        entries[name] = ProfileEntry(
            method=method,
            frequency=frequency,
            tail_flag=flag,
            per_model={
                m: MethodStats(*stats.get(m, (0, 0))) for m in model_ids
            },
        )
    total = sum(freq for freq, _, _ in table.values())
    return ModelProfile(entries, total, 50.0, list(model_ids))
