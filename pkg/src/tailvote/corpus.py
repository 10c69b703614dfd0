"""Datasets, prediction files, and the canonical API method representation.

An API method is a ``Class.method`` string (constructors appear as
``Class.<init>``); an API method sequence is an ordered list of methods and
is the unit of exact-match correctness everywhere downstream. This module
owns the single tokenizer that turns raw model output text into sequences,
so that every consumer agrees on what a model actually recommended.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import FormatError

#: Characters treated as token separators in raw model output, in addition
#: to whitespace (which always separates). Extensible per call site because
#: different models decorate their output differently.
DEFAULT_DELIMITERS = ","

#: Call-syntax noise stripped from the end of a token before splitting.
_TRAILING_NOISE = "();"


@dataclass(frozen=True, order=True)
class ApiMethod:
    """One API method in canonical ``Class.method`` form.

    Both parts are non-empty, free of whitespace and dots; package
    qualifiers are collapsed away by :func:`normalize_method`.
    """

    class_name: str
    method_name: str

    def __post_init__(self) -> None:
        for part in (self.class_name, self.method_name):
            if not part or "." in part or any(c.isspace() for c in part):
                raise ValueError(f"invalid API method part: {part!r}")

    @property
    def canonical(self) -> str:
        return f"{self.class_name}.{self.method_name}"

    def __str__(self) -> str:
        return self.canonical


@dataclass(frozen=True)
class ApiSequence:
    """An ordered list of API methods; duplicates allowed, order significant.

    Equality is positional equality of canonical forms, which makes
    sequences directly usable as vote keys.
    """

    methods: tuple[ApiMethod, ...] = ()

    def __len__(self) -> int:
        return len(self.methods)

    def __iter__(self):
        return iter(self.methods)

    def __bool__(self) -> bool:
        return bool(self.methods)

    @property
    def canonicals(self) -> tuple[str, ...]:
        return tuple(m.canonical for m in self.methods)

    def to_text(self) -> str:
        """Space-joined canonical form; parses back to an equal sequence."""
        return " ".join(self.canonicals)

    @classmethod
    def from_canonicals(cls, names: Iterable[str]) -> "ApiSequence":
        methods = []
        for name in names:
            method = normalize_method(name)
            if method is None:
                raise ValueError(f"not a canonical API method: {name!r}")
            methods.append(method)
        return cls(tuple(methods))


@dataclass(frozen=True)
class Sample:
    """One benchmark instance."""

    sample_id: str
    query: str
    context: str
    ground_truth: ApiSequence
    tail_label: int | None = None  # head=0, tail=1, unknown=None

    @property
    def input_text(self) -> str:
        """Query and code context as the single string classifiers consume."""
        return f"{self.query} {self.context}"


@dataclass(frozen=True)
class PredictionRecord:
    """One model's raw output for one sample, plus its parsed sequence."""

    sample_id: str
    model_id: str
    raw_output: str
    parsed: ApiSequence = field(default_factory=ApiSequence)


def normalize_method(token: str) -> ApiMethod | None:
    """Normalize one token to an ApiMethod, or None when it is not one.

    Strips surrounding whitespace and trailing call-syntax noise, splits at
    the last dot, and collapses any package qualifier to its final
    component. Case is preserved (Java identifiers are case-sensitive).
    """
    token = token.strip().rstrip(_TRAILING_NOISE)
    last = token.rfind(".")
    if last < 0:
        return None
    left, method_name = token[:last], token[last + 1:]
    class_name = left.rsplit(".", 1)[-1]
    if not class_name or not method_name:
        return None
    if any(c.isspace() for c in class_name) or any(c.isspace() for c in method_name):
        return None
    return ApiMethod(class_name, method_name)


def parse_api_sequence(raw_output: str, delimiters: str = DEFAULT_DELIMITERS) -> ApiSequence:
    """Parse raw model output into an API method sequence.

    Splits on whitespace plus ``delimiters``, keeps tokens that normalize to
    an API method, preserves order and duplicates. Never raises: junk input
    simply yields an empty sequence, a legal candidate that matches nothing.
    """
    text = raw_output
    for ch in delimiters:
        text = text.replace(ch, " ")
    methods = []
    for token in text.split():
        method = normalize_method(token)
        if method is not None:
            methods.append(method)
    return ApiSequence(tuple(methods))


# --------------------------------------------------------------------------- #
# Wire formats (JSON Lines, UTF-8, LF)                                         #
# --------------------------------------------------------------------------- #

def _read_jsonl(path: Path) -> Iterable[tuple[int, dict]]:
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise FormatError(f"{path}:{lineno}: expected a JSON object")
            yield lineno, obj


def load_samples(path: str | Path) -> list[Sample]:
    """Load a dataset file: one object per line with id/query/context/ground_truth.

    Ground truths must be non-empty lists of canonical methods; duplicate
    sample ids and malformed lines are errors carrying file and line.
    """
    path = Path(path)
    samples: list[Sample] = []
    seen: set[str] = set()
    for lineno, obj in _read_jsonl(path):
        try:
            sample_id = str(obj["id"])
            query = str(obj["query"])
            context = str(obj["context"])
            truth_raw = obj["ground_truth"]
        except KeyError as exc:
            raise FormatError(f"{path}:{lineno}: missing field {exc.args[0]!r}") from exc
        if not isinstance(truth_raw, list) or not truth_raw:
            raise FormatError(f"{path}:{lineno}: ground_truth must be a non-empty list")
        try:
            ground_truth = ApiSequence.from_canonicals(str(t) for t in truth_raw)
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from exc
        tail_raw = obj.get("tail_label")
        if tail_raw not in (None, 0, 1):
            raise FormatError(f"{path}:{lineno}: tail_label must be 0, 1 or null")
        if sample_id in seen:
            raise FormatError(f"{path}:{lineno}: duplicate sample id {sample_id!r}")
        seen.add(sample_id)
        samples.append(Sample(sample_id, query, context, ground_truth, tail_raw))
    return samples


def dump_samples(samples: Iterable[Sample]) -> str:
    return "".join(json.dumps({
        "id": s.sample_id,
        "query": s.query,
        "context": s.context,
        "ground_truth": list(s.ground_truth.canonicals),
        "tail_label": s.tail_label,
    }, ensure_ascii=False) + "\n" for s in samples)


def write_samples(samples: Iterable[Sample], path: str | Path) -> None:
    Path(path).write_text(dump_samples(samples), encoding="utf-8", newline="\n")


def load_predictions(path: str | Path, expected_model: str) -> list[PredictionRecord]:
    """Load a prediction file and parse every raw output.

    Every record must carry ``expected_model``; duplicate (sample, model)
    pairs are errors.
    """
    path = Path(path)
    records: list[PredictionRecord] = []
    seen: set[str] = set()
    for lineno, obj in _read_jsonl(path):
        try:
            sample_id = str(obj["id"])
            model_id = str(obj["model"])
            raw_output = str(obj["output"])
        except KeyError as exc:
            raise FormatError(f"{path}:{lineno}: missing field {exc.args[0]!r}") from exc
        if model_id != expected_model:
            raise FormatError(
                f"{path}:{lineno}: model {model_id!r} does not match expected {expected_model!r}"
            )
        if sample_id in seen:
            raise FormatError(f"{path}:{lineno}: duplicate prediction for sample {sample_id!r}")
        seen.add(sample_id)
        records.append(PredictionRecord(sample_id, model_id, raw_output, parse_api_sequence(raw_output)))
    return records


def dump_predictions(records: Iterable[PredictionRecord]) -> str:
    return "".join(json.dumps({
        "id": r.sample_id,
        "model": r.model_id,
        "output": r.raw_output,
    }, ensure_ascii=False) + "\n" for r in records)


def write_predictions(records: Iterable[PredictionRecord], path: str | Path) -> None:
    Path(path).write_text(dump_predictions(records), encoding="utf-8", newline="\n")
