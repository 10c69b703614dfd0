"""Tail-case detection: gate inputs whose recommendation would be unreliable.

A sample is a tail case when its ground-truth sequence contains at least one
tail-flagged (or unknown) method. At inference time the ground truth is not
available, so tail-ness is predicted from the input text alone: either by
the bundled token-statistics baseline classifier, or by verdicts computed
externally (e.g. by a fine-tuned transformer) and loaded from file.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Sample
from .errors import ConfigError, FormatError
from .profile import HEAD

SOURCE_BASELINE = "baseline"
SOURCE_EXTERNAL = "external"

_IDENTIFIER = re.compile(r"[0-9A-Za-z]+")
_CAMEL = re.compile(r"[A-Z]+(?![a-z])|[A-Z][a-z0-9]*|[a-z0-9]+")


@dataclass(frozen=True)
class TailVerdict:
    sample_id: str
    is_tail: bool
    source: str


def derive_tail_label(sample: Sample, flags: Mapping[str, str]) -> int:
    """1 when any ground-truth method is tail-flagged or unknown, else 0."""
    for method in sample.ground_truth:
        if flags.get(method.canonical, None) != HEAD:
            return 1
    return 0


def tokenize_text(text: str) -> list[str]:
    """Classifier tokenization: split on non-alphanumerics, then camelCase.

    Code identifiers dominate the context text, so ``readLine`` becomes
    ``read line`` and ``XMLParser`` becomes ``xml parser``. Output is
    lowercased; duplicates are kept (multinomial counting).
    """
    tokens: list[str] = []
    for ident in _IDENTIFIER.findall(text):
        for piece in _CAMEL.findall(ident):
            tokens.append(piece.lower())
    return tokens


@dataclass
class BaselineClassifier:
    """Two-class multinomial token model with additive smoothing.

    ``vocabulary`` maps token -> (head_count, tail_count); priors are the
    training class shares. Stands in for heavyweight learned classifiers
    behind the same one-verdict-per-sample interface.
    """

    vocabulary: dict[str, tuple[int, int]]
    class_priors: tuple[float, float]  # (head, tail)
    smoothing_alpha: float

    @cached_property
    def class_token_totals(self) -> tuple[int, int]:
        head_total = sum(c[0] for c in self.vocabulary.values())
        tail_total = sum(c[1] for c in self.vocabulary.values())
        return head_total, tail_total

    def log_scores(self, text: str) -> tuple[float, float]:
        alpha = self.smoothing_alpha
        vocab_size = len(self.vocabulary)
        totals = self.class_token_totals
        scores = [math.log(self.class_priors[0]), math.log(self.class_priors[1])]
        for token in tokenize_text(text):
            counts = self.vocabulary.get(token, (0, 0))
            for cls in (0, 1):
                scores[cls] += math.log(
                    (counts[cls] + alpha) / (totals[cls] + alpha * vocab_size)
                )
        return scores[0], scores[1]


def train_baseline(
    samples: Sequence[Sample],
    labels: Sequence[int],
    smoothing_alpha: float = 1.0,
) -> BaselineClassifier:
    """Fit the baseline on (sample, head/tail label) pairs.

    Requires both classes to be present; a single-class training set has no
    decision boundary and is rejected.
    """
    if smoothing_alpha <= 0:
        raise ConfigError(f"smoothing alpha must be positive, got {smoothing_alpha}")
    if len(samples) != len(labels):
        raise ConfigError("samples and labels differ in length")
    class_counts = [0, 0]
    vocabulary: dict[str, list[int]] = {}
    for sample, label in zip(samples, labels):
        if label not in (0, 1):
            raise ConfigError(f"label for {sample.sample_id!r} must be 0 or 1, got {label!r}")
        class_counts[label] += 1
        for token in tokenize_text(sample.input_text):
            counts = vocabulary.setdefault(token, [0, 0])
            counts[label] += 1
    if class_counts[0] == 0 or class_counts[1] == 0:
        raise ConfigError("training set must contain both head and tail samples")
    total = class_counts[0] + class_counts[1]
    return BaselineClassifier(
        vocabulary={t: (c[0], c[1]) for t, c in sorted(vocabulary.items())},
        class_priors=(class_counts[0] / total, class_counts[1] / total),
        smoothing_alpha=float(smoothing_alpha),
    )


def classify(classifier: BaselineClassifier, sample: Sample) -> TailVerdict:
    """Argmax of smoothed log-likelihood plus log-prior; ties go to tail.

    The tie-break is conservative on purpose: the system exists to suppress
    unreliable outputs, so an ambiguous input is rejected.
    """
    head_score, tail_score = classifier.log_scores(sample.input_text)
    return TailVerdict(sample.sample_id, is_tail=tail_score >= head_score, source=SOURCE_BASELINE)


def evaluate_classifier(verdicts: Sequence[TailVerdict], samples: Sequence[Sample]) -> float:
    """Fraction of verdicts that match the samples' tail labels."""
    if not verdicts:
        raise ConfigError("no verdicts to evaluate")
    by_id = {s.sample_id: s for s in samples}
    matches = 0
    for verdict in verdicts:
        sample = by_id.get(verdict.sample_id)
        if sample is None:
            raise ConfigError(f"verdict references unknown sample {verdict.sample_id!r}")
        if sample.tail_label is None:
            raise ConfigError(f"sample {sample.sample_id!r} has no tail label")
        if int(verdict.is_tail) == sample.tail_label:
            matches += 1
    return matches / len(verdicts)


# --------------------------------------------------------------------------- #
# Wire formats                                                                 #
# --------------------------------------------------------------------------- #

def load_external_verdicts(path: str | Path) -> list[TailVerdict]:
    """Load verdicts computed outside the toolkit: {"id": ..., "tail": 0|1}."""
    path = Path(path)
    verdicts: list[TailVerdict] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                sample_id = str(obj["id"])
                tail = obj["tail"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise FormatError(f"{path}:{lineno}: bad verdict line: {exc}") from exc
            if tail not in (0, 1):
                raise FormatError(f"{path}:{lineno}: tail must be 0 or 1")
            if sample_id in seen:
                raise FormatError(f"{path}:{lineno}: duplicate verdict for sample {sample_id!r}")
            seen.add(sample_id)
            verdicts.append(TailVerdict(sample_id, bool(tail), SOURCE_EXTERNAL))
    return verdicts


def write_verdicts(verdicts: Iterable[TailVerdict], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for v in verdicts:
            fh.write(json.dumps({"id": v.sample_id, "tail": int(v.is_tail)}) + "\n")


def save_classifier(classifier: BaselineClassifier, path: str | Path) -> None:
    doc = {
        "alpha": classifier.smoothing_alpha,
        "priors": {"head": classifier.class_priors[0], "tail": classifier.class_priors[1]},
        "vocabulary": {t: [c[0], c[1]] for t, c in classifier.vocabulary.items()},
    }
    Path(path).write_text(json.dumps(doc, ensure_ascii=False, indent=None) + "\n", encoding="utf-8")


def load_classifier(path: str | Path) -> BaselineClassifier:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        alpha = float(doc["alpha"])
        priors = (float(doc["priors"]["head"]), float(doc["priors"]["tail"]))
        vocabulary = {str(t): (int(c[0]), int(c[1])) for t, c in doc["vocabulary"].items()}
    except (json.JSONDecodeError, KeyError, TypeError, IndexError) as exc:
        raise FormatError(f"{path}: bad classifier file: {exc}") from exc
    return BaselineClassifier(vocabulary, priors, alpha)
