"""Batch inference over pretrained checkpoints, emitting toolkit wire formats.

Reads datasets in the toolkit's JSONL format, runs a seq2seq checkpoint
(greedy decoding, so exports are bit-reproducible on a fixed stack) or a
binary sequence classifier, and writes prediction / verdict files the
toolkit loads directly. Raw decoded text crosses the boundary verbatim;
parsing into method sequences stays on the toolkit side so there is exactly
one tokenizer in the system.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, Sequence

import torch
from transformers import (
    AutoModelForSeq2SeqLM,
    AutoModelForSequenceClassification,
    AutoTokenizer,
)

log = logging.getLogger("model_runner")

#: classifier output index meaning "tail" (labels are head=0, tail=1)
TAIL_CLASS_INDEX = 1


@dataclass(frozen=True)
class RunnerConfig:
    model_path: str                 # checkpoint directory or hub identifier
    model_id: str                   # value written into the "model" field
    output: str                     # destination file
    max_input_tokens: int = 256
    max_output_tokens: int = 100    # raise to 256 for long-output models
    batch_size: int = 8
    device: str = "cpu"

    def __post_init__(self) -> None:
        if self.max_input_tokens <= 0 or self.max_output_tokens <= 0:
            raise ValueError("token limits must be positive")
        if self.batch_size <= 0:
            raise ValueError("batch size must be positive")
        parent = Path(self.output).resolve().parent
        if not parent.is_dir():
            raise ValueError(f"output directory does not exist: {parent}")


def load_config(path: str | Path, **overrides) -> RunnerConfig:
    """Config from a single JSON file; keyword overrides win."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    known = {f for f in RunnerConfig.__dataclass_fields__}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    config = RunnerConfig(**doc)
    clean = {k: v for k, v in overrides.items() if v is not None}
    return replace(config, **clean) if clean else config


@dataclass(frozen=True)
class DatasetRow:
    sample_id: str
    text: str  # query and context concatenated, the models' input convention


def read_dataset(path: str | Path) -> list[DatasetRow]:
    """Rows from the toolkit dataset format; only id/query/context are used."""
    rows: list[DatasetRow] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                sample_id = str(obj["id"])
                text = f"{obj['query']} {obj['context']}"
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad dataset line: {exc}") from exc
            rows.append(DatasetRow(sample_id, text))
    if not rows:
        raise ValueError(f"{path}: empty dataset")
    return rows


def _batches(rows: Sequence[DatasetRow], size: int) -> Iterator[Sequence[DatasetRow]]:
    for start in range(0, len(rows), size):
        yield rows[start:start + size]


def _atomic_lines(path: str | Path, lines: Iterator[str]) -> None:
    """Stream lines to a temp file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            for line in lines:
                fh.write(line + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def export_predictions(config: RunnerConfig, dataset_path: str | Path) -> Path:
    """One prediction record per sample, raw decoded text stored verbatim.

    Decoding is greedy (no sampling, single beam). A sample whose generation
    fails is written with an empty output and logged, so one bad input never
    loses a whole export.
    """
    rows = read_dataset(dataset_path)
    tokenizer = AutoTokenizer.from_pretrained(config.model_path)
    model = AutoModelForSeq2SeqLM.from_pretrained(config.model_path)
    model.to(config.device)
    model.eval()

    def decode_batch(batch: Sequence[DatasetRow]) -> list[str]:
        encoded = tokenizer(
            [row.text for row in batch],
            return_tensors="pt",
            padding=True,
            truncation=True,
            max_length=config.max_input_tokens,
        ).to(config.device)
        with torch.no_grad():
            generated = model.generate(
                **encoded,
                do_sample=False,
                num_beams=1,
                max_new_tokens=config.max_output_tokens,
            )
        return tokenizer.batch_decode(generated, skip_special_tokens=True)

    def records() -> Iterator[str]:
        for batch in _batches(rows, config.batch_size):
            try:
                outputs = decode_batch(batch)
            except Exception:
                # fall back to per-sample generation so one input cannot sink the batch
                outputs = []
                for row in batch:
                    try:
                        outputs.extend(decode_batch([row]))
                    except Exception:
                        log.warning("generation failed for sample %s; writing empty output",
                                    row.sample_id, exc_info=True)
                        outputs.append("")
            for row, text in zip(batch, outputs):
                yield json.dumps(
                    {"id": row.sample_id, "model": config.model_id, "output": text},
                    ensure_ascii=False,
                )

    out = Path(config.output)
    _atomic_lines(out, records())
    log.info("wrote %d prediction records to %s", len(rows), out)
    return out


def export_tail_verdicts(config: RunnerConfig, dataset_path: str | Path) -> Path:
    """One binary tail verdict per sample, ids in input order."""
    rows = read_dataset(dataset_path)
    tokenizer = AutoTokenizer.from_pretrained(config.model_path)
    model = AutoModelForSequenceClassification.from_pretrained(config.model_path)
    model.to(config.device)
    model.eval()

    def verdicts() -> Iterator[str]:
        for batch in _batches(rows, config.batch_size):
            encoded = tokenizer(
                [row.text for row in batch],
                return_tensors="pt",
                padding=True,
                truncation=True,
                max_length=config.max_input_tokens,
            ).to(config.device)
            with torch.no_grad():
                logits = model(**encoded).logits
            labels = logits.argmax(dim=-1).tolist()
            for row, label in zip(batch, labels):
                tail = 1 if label == TAIL_CLASS_INDEX else 0
                yield json.dumps({"id": row.sample_id, "tail": tail})

    out = Path(config.output)
    _atomic_lines(out, verdicts())
    log.info("wrote %d verdicts to %s", len(rows), out)
    return out
