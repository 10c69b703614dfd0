"""Synthetic long-tail corpora and simulated models for desk-scale studies.

Method usage follows a bounded Zipf law, so generated corpora reproduce the
head-heavy frequency shape the pipeline is built around. Simulated models
emit the ground truth with a configurable per-sample success probability
(split by head/tail samples) and otherwise corrupt it structurally, giving
the filters realistic targets: hallucinated methods trip the recorded
filter, substitutions into rare methods trip the head filter.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .corpus import ApiMethod, ApiSequence, PredictionRecord, Sample
from .errors import ConfigError
from .profile import HEAD, assign_tail_flags

ERROR_SUBSTITUTE = "substitute_random"
ERROR_DROP = "drop_method"
ERROR_HALLUCINATE = "hallucinate"
ERROR_MODES = (ERROR_SUBSTITUTE, ERROR_DROP, ERROR_HALLUCINATE)


@dataclass(frozen=True)
class SynthConfig:
    num_methods: int
    num_samples: int
    zipf_exponent: float = 1.1
    sequence_length_range: tuple[int, int] = (1, 4)
    p: float = 50.0
    seed: int = 0

    def __post_init__(self) -> None:
        lo, hi = self.sequence_length_range
        if self.num_methods < 2:
            raise ConfigError("need at least two methods")
        if self.num_samples < 1:
            raise ConfigError("need at least one sample")
        if self.zipf_exponent <= 0:
            raise ConfigError("zipf exponent must be positive")
        if lo < 1 or hi < lo:
            raise ConfigError(f"bad sequence length range {self.sequence_length_range}")
        if not 0 < self.p <= 100:
            raise ConfigError(f"tail threshold p must be in (0, 100], got {self.p}")


@dataclass(frozen=True)
class SyntheticModelSpec:
    model_id: str
    head_accuracy: float
    tail_accuracy: float
    error_mode: str = ERROR_SUBSTITUTE
    correlation_group: str | None = None  # same group => same success coin

    def __post_init__(self) -> None:
        for rate in (self.head_accuracy, self.tail_accuracy):
            if not 0.0 <= rate <= 1.0:
                raise ConfigError(f"accuracy rates must be in [0, 1], got {rate}")
        if self.error_mode not in ERROR_MODES:
            raise ConfigError(f"unknown error mode {self.error_mode!r}")


def _stable_hash(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


def _rng(*entropy: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(entropy))))


def method_universe(num_methods: int) -> list[ApiMethod]:
    """Deterministic method names; rank order matches Zipf weight order."""
    return [ApiMethod(f"Lib{i}", "call") for i in range(num_methods)]


def zipf_weights(num_methods: int, exponent: float) -> np.ndarray:
    ranks = np.arange(1, num_methods + 1, dtype=np.float64)
    weights = ranks ** -exponent
    return weights / weights.sum()


def generate_corpus(config: SynthConfig) -> list[Sample]:
    """Draw a corpus whose ground-truth methods follow the Zipf law.

    Sequence lengths are uniform over the configured range and methods are
    drawn with frequency weights, so realized counts exhibit the long-tail
    shape. Tail labels are filled in from the realized frequencies at the
    config's threshold. Deterministic given the seed.
    """
    universe = method_universe(config.num_methods)
    weights = zipf_weights(config.num_methods, config.zipf_exponent)
    lo, hi = config.sequence_length_range

    rng = _rng(config.seed, _stable_hash("corpus"))
    lengths = rng.integers(lo, hi + 1, size=config.num_samples)
    draws = rng.choice(config.num_methods, size=int(lengths.sum()), p=weights)

    sequences: list[ApiSequence] = []
    cursor = 0
    for length in lengths:
        chosen = draws[cursor:cursor + int(length)]
        cursor += int(length)
        sequences.append(ApiSequence(tuple(universe[int(i)] for i in chosen)))

    # realized frequencies decide the head/tail split and the labels
    counts: dict[str, int] = {}
    for seq in sequences:
        for m in seq:
            counts[m.canonical] = counts.get(m.canonical, 0) + 1
    flags = assign_tail_flags(counts, config.p)

    samples: list[Sample] = []
    for i, seq in enumerate(sequences):
        label = 0 if all(flags.get(m.canonical) == HEAD for m in seq) else 1
        samples.append(Sample(
            sample_id=f"s{i:06d}",
            query="call " + " ".join(seq.canonicals),
            context=f"void sample{i}() {{ }}",
            ground_truth=seq,
            tail_label=label,
        ))
    return samples


def simulate_model(
    spec: SyntheticModelSpec,
    samples: Sequence[Sample],
    flags: Mapping[str, str],
    seed: int,
) -> list[PredictionRecord]:
    """Emit one prediction per sample under the given model's error profile.

    The per-sample success coin comes from a substream keyed by the shared
    seed and the model id (or its correlation group, so grouped models fail
    on the same samples); corruption randomness is always per-model. Adding
    a model never perturbs another model's draws.
    """
    coin_key = _stable_hash(spec.correlation_group or spec.model_id)
    noise_key = _stable_hash(spec.model_id)
    universe = sorted(flags)  # substitution pool: every flagged method

    records: list[PredictionRecord] = []
    for index, sample in enumerate(samples):
        truth = sample.ground_truth
        all_head = all(flags.get(m.canonical) == HEAD for m in truth)
        accuracy = spec.head_accuracy if all_head else spec.tail_accuracy

        coin = _rng(seed, 0xC0117, coin_key, index).random()
        if coin < accuracy:
            emitted = truth
        else:
            emitted = _corrupt(truth, spec.error_mode, universe, _rng(seed, 0xE4407, noise_key, index))

        raw = emitted.to_text()
        records.append(PredictionRecord(sample.sample_id, spec.model_id, raw, emitted))
    return records


def _corrupt(
    truth: ApiSequence,
    mode: str,
    universe: Sequence[str],
    rng: np.random.Generator,
) -> ApiSequence:
    methods = list(truth.methods)
    if not methods:
        return truth
    position = int(rng.integers(len(methods)))
    if mode == ERROR_SUBSTITUTE:
        # uniform over the universe minus the original at that position
        original = methods[position].canonical
        pool = [name for name in universe if name != original]
        if not pool:
            return ApiSequence(tuple(methods[:position] + methods[position + 1:]))
        replacement = pool[int(rng.integers(len(pool)))]
        cls, name = replacement.rsplit(".", 1)
        methods[position] = ApiMethod(cls, name)
    elif mode == ERROR_DROP:
        del methods[position]
    else:  # hallucinate: inject a method no profile has ever recorded
        ghost = ApiMethod(f"Ghost{int(rng.integers(1_000_000))}", "conjure")
        methods.insert(position, ghost)
    return ApiSequence(tuple(methods))
