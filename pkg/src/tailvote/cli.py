"""Command-line entry point.

Subcommands: ``profile`` builds and persists a model profile; ``train-tail``
and ``classify-tail`` manage the baseline tail classifier; ``evaluate`` runs
the pipeline over a dataset (optionally sweeping filters, decision rules, p
and theta in one invocation); ``synth`` generates a synthetic corpus plus
simulated predictions and evaluates them end to end; ``report`` recomputes
metrics from a stored outcome file.

A JSON manifest may supply every option (``--manifest``); explicit flags
override manifest entries. Every run writes a manifest echo with resolved
options, seeds, and input hashes, sufficient to replay it exactly, and all
outputs are written atomically (temp file, then rename).
"""

from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Sequence

from . import corpus, ensemble, metrics, profile, synth, tail
from .errors import ConfigError, ToolkitError

FILTER_LABELS = {"none": "None", "R": "R-Filter", "H": "H-Filter", "RH": "RH-Filter"}
DECISION_LABELS = {
    "simple_rejection": "Simple Rejection",
    "score_based": "Score-based",
    "best_model": "Best Model",
}

DEFAULT_DEMO_MANIFEST = {
    "synth": {
        "num_methods": 300,
        "num_samples": 3000,
        "zipf_exponent": 1.1,
        "sequence_length_range": [1, 4],
        "p": 50.0,
        "seed": 7,
    },
    "models": [
        {"model_id": "m1", "head_accuracy": 0.80, "tail_accuracy": 0.30},
        {"model_id": "m2", "head_accuracy": 0.75, "tail_accuracy": 0.25},
        {"model_id": "m3", "head_accuracy": 0.70, "tail_accuracy": 0.20,
         "error_mode": "hallucinate"},
    ],
    "filter": "H",
    "decision": "simple_rejection",
    "use_tail_analyzer": True,
}


# --------------------------------------------------------------------------- #
# Small file helpers                                                           #
# --------------------------------------------------------------------------- #

def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_echo(primary_output: Path, command: str, manifest: dict, input_paths: Sequence[Path]) -> None:
    echo = {
        "command": command,
        "manifest": manifest,
        "input_hashes": {str(p): sha256_file(p) for p in sorted(set(input_paths))},
    }
    atomic_write_text(primary_output.with_suffix(".echo.json"),
                      json.dumps(echo, indent=2, sort_keys=True) + "\n")


def _require(manifest: dict, key: str, command: str):
    value = manifest.get(key)
    if value in (None, "", [], {}):
        raise ConfigError(f"{command}: missing required option {key!r}")
    return value


def _existing_path(value: str, what: str) -> Path:
    path = Path(value)
    if not path.exists():
        raise ConfigError(f"{what} does not exist: {path}")
    return path


def _merge_manifest(args: argparse.Namespace, keys: Sequence[str]) -> dict:
    """Resolve a manifest dict from --manifest plus explicit flag overrides."""
    manifest: dict = {}
    if getattr(args, "manifest", None):
        manifest_path = _existing_path(args.manifest, "manifest file")
        try:
            manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{manifest_path}: invalid JSON: {exc.msg}")
        if not isinstance(manifest, dict):
            raise ConfigError(f"{manifest_path}: manifest must be a JSON object")
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            manifest[key] = value
    return manifest


def _parse_predictions_arg(pairs: Sequence[str] | None) -> dict[str, str] | None:
    if not pairs:
        return None
    out: dict[str, str] = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--predictions expects model=path, got {pair!r}")
        model_id, path = pair.split("=", 1)
        out[model_id] = path
    return out


def _load_prediction_files(spec: dict[str, str]) -> dict[str, list[corpus.PredictionRecord]]:
    return {
        model_id: corpus.load_predictions(_existing_path(path, f"prediction file for {model_id!r}"), model_id)
        for model_id, path in spec.items()
    }


def _profiling_split(samples: list[corpus.Sample], explicit: list[corpus.Sample] | None) -> list[corpus.Sample]:
    """Explicit profiling dataset when given, else the first half of the file."""
    if explicit is not None:
        return explicit
    return samples[: max(1, len(samples) // 2)]


def _restrict_to(records: list[corpus.PredictionRecord], ids: set[str]) -> list[corpus.PredictionRecord]:
    return [r for r in records if r.sample_id in ids]


def default_best_model(
    samples: Sequence[corpus.Sample],
    predictions_by_model: dict[str, list[corpus.PredictionRecord]],
    model_ids: Sequence[str],
) -> str:
    """Model with the highest standalone exact-match rate on the given samples."""
    best_id, best_rate = model_ids[0], -1.0
    for model_id in model_ids:
        by_id = ensemble.index_predictions(predictions_by_model[model_id])
        hits = sum(
            1 for s in samples
            if (r := by_id.get(s.sample_id)) is not None and r.parsed == s.ground_truth
        )
        rate = hits / len(samples)
        if rate > best_rate:
            best_id, best_rate = model_id, rate
    return best_id


# --------------------------------------------------------------------------- #
# Sweep handling                                                               #
# --------------------------------------------------------------------------- #

def resolve_cells(manifest: dict) -> list[dict]:
    """Cartesian product of the sweep axes over the base pipeline options."""
    base = {
        "filter": manifest.get("filter", "none"),
        "decision": manifest.get("decision", "simple_rejection"),
        "p": float(manifest.get("p", 50.0)),
        "theta": float(manifest.get("theta", 0.9)),
    }
    sweep = manifest.get("sweep") or {}
    axes = {}
    for axis in ("filter", "decision", "p", "theta"):
        values = sweep.get(axis)
        if values is not None and (not isinstance(values, list) or not values):
            raise ConfigError(f"sweep axis {axis!r} must be a non-empty list")
        axes[axis] = values if values is not None else [base[axis]]
    cells = []
    for filt, decision, p, theta in itertools.product(
        axes["filter"], axes["decision"], axes["p"], axes["theta"]
    ):
        cells.append({"filter": filt, "decision": decision, "p": float(p), "theta": float(theta)})
    return cells


def _cell_tag(cell: dict) -> str:
    return f"{cell['filter']}-{cell['decision']}-p{cell['p']:g}-t{cell['theta']:g}"


def _outcome_path(base: Path, cell: dict, multiple: bool) -> Path:
    if not multiple:
        return base
    return base.with_name(f"{base.stem}.{_cell_tag(cell)}{base.suffix}")


def _evaluate_cells(
    *,
    samples: list[corpus.Sample],
    predictions_by_model: dict[str, list[corpus.PredictionRecord]],
    model_ids: list[str],
    base_profile: profile.ModelProfile,
    cells: list[dict],
    manifest: dict,
    verdicts_by_id: dict[str, tail.TailVerdict] | None,
    best_model_id: str | None,
    outcomes_base: Path,
    policy: str,
    workers: int,
) -> list[dict]:
    """Run every sweep cell and write its outcome file; returns report rows."""
    use_gate = bool(manifest.get("use_tail_analyzer", False))
    indexed = {m: ensemble.index_predictions(predictions_by_model[m]) for m in model_ids}
    raw_by_id = {
        s.sample_id: [
            indexed[m][s.sample_id].parsed if s.sample_id in indexed[m] else corpus.ApiSequence()
            for m in model_ids
        ]
        for s in samples
    }

    configs = [
        ensemble.PipelineConfig(
            model_ids=tuple(model_ids),
            filter=cell["filter"],
            decision=cell["decision"],
            theta=cell["theta"],
            best_model_id=best_model_id if cell["decision"] == "best_model" else None,
            use_tail_analyzer=use_gate,
            p=cell["p"],
        )
        for cell in cells
    ]
    if use_gate and verdicts_by_id is None:
        raise ConfigError("use_tail_analyzer is set but no verdict source was given")

    rows = []
    for cell, config in zip(cells, configs):
        cell_profile = profile.with_tail_threshold(base_profile, cell["p"])
        outcomes = ensemble.run_dataset(
            samples, indexed, config, cell_profile,
            verdicts_by_id=verdicts_by_id, workers=workers,
        )
        report = metrics.compute_report(outcomes, samples, raw_by_id, policy)
        path = _outcome_path(outcomes_base, cell, multiple=len(cells) > 1)
        atomic_write_text(path, ensemble.dump_outcomes(outcomes))
        rows.append({
            **cell,
            "use_tail_analyzer": use_gate,
            "best_model_id": config.best_model_id,
            **report.to_dict(),
        })
    return rows


def _rows_to_table(rows: list[dict]) -> str:
    table_rows = []
    for row in rows:
        filt = FILTER_LABELS.get(row["filter"], row["filter"])
        if row.get("use_tail_analyzer"):
            filt += " +gate"
        decision = DECISION_LABELS.get(row["decision"], row["decision"])
        report = metrics.EvaluationReport(
            total_inputs=row["total_inputs"], total_outputs=row["total_outputs"],
            correct_outputs=row["correct_outputs"], rejected=row["rejected"],
            rejected_correct=row["rejected_correct"], tar=row["tar"], rr=row["rr"],
            frr=row["frr"], per_stage_rejections=row["per_stage_rejections"],
        )
        table_rows.append((filt, decision, report))
    return metrics.render_table(table_rows)


# --------------------------------------------------------------------------- #
# Subcommands                                                                  #
# --------------------------------------------------------------------------- #

def cmd_profile(args: argparse.Namespace) -> int:
    manifest = _merge_manifest(args, ["dataset", "profiling_dataset", "predictions", "p", "out"])
    if isinstance(manifest.get("predictions"), list):
        manifest["predictions"] = _parse_predictions_arg(manifest["predictions"])
    dataset_path = _existing_path(str(_require(manifest, "dataset", "profile")), "dataset")
    out_path = Path(str(_require(manifest, "out", "profile")))
    predictions_spec = _require(manifest, "predictions", "profile")
    p = float(manifest.get("p", 50.0))

    samples = corpus.load_samples(dataset_path)
    explicit = None
    input_paths = [dataset_path]
    if manifest.get("profiling_dataset"):
        prof_path = _existing_path(str(manifest["profiling_dataset"]), "profiling dataset")
        explicit = corpus.load_samples(prof_path)
        input_paths.append(prof_path)
    profiling = _profiling_split(samples, explicit)
    profiling_ids = {s.sample_id for s in profiling}

    predictions_by_model = _load_prediction_files(predictions_spec)
    input_paths += [Path(p_) for p_ in predictions_spec.values()]
    restricted = {
        m: _restrict_to(records, profiling_ids) for m, records in predictions_by_model.items()
    }
    built = profile.build_profile(profiling, restricted, p)
    atomic_write_text(out_path, profile.dump_profile(built))
    write_echo(out_path, "profile", manifest, input_paths)
    print(f"profile: {len(built.entries)} methods, {len(built.model_ids)} models -> {out_path}")
    return 0


def cmd_train_tail(args: argparse.Namespace) -> int:
    manifest = _merge_manifest(args, ["dataset", "profile", "alpha", "out"])
    dataset_path = _existing_path(str(_require(manifest, "dataset", "train-tail")), "dataset")
    out_path = Path(str(_require(manifest, "out", "train-tail")))
    alpha = float(manifest.get("alpha", 1.0))

    samples = corpus.load_samples(dataset_path)
    input_paths = [dataset_path]
    if all(s.tail_label is not None for s in samples):
        labels = [int(s.tail_label) for s in samples]  # type: ignore[arg-type]
    elif manifest.get("profile"):
        profile_path = _existing_path(str(manifest["profile"]), "profile")
        input_paths.append(profile_path)
        loaded = profile.load_profile(profile_path)
        flags = {name: e.tail_flag for name, e in loaded.entries.items()}
        labels = [tail.derive_tail_label(s, flags) for s in samples]
    else:
        raise ConfigError("train-tail: dataset lacks tail labels; provide --profile to derive them")

    classifier = tail.train_baseline(samples, labels, alpha)
    atomic_write_text(out_path, json.dumps({
        "alpha": classifier.smoothing_alpha,
        "priors": {"head": classifier.class_priors[0], "tail": classifier.class_priors[1]},
        "vocabulary": {t: [c[0], c[1]] for t, c in classifier.vocabulary.items()},
    }, ensure_ascii=False) + "\n")
    write_echo(out_path, "train-tail", manifest, input_paths)
    print(f"train-tail: {len(classifier.vocabulary)} tokens -> {out_path}")
    return 0


def cmd_classify_tail(args: argparse.Namespace) -> int:
    manifest = _merge_manifest(args, ["dataset", "classifier", "out"])
    dataset_path = _existing_path(str(_require(manifest, "dataset", "classify-tail")), "dataset")
    classifier_path = _existing_path(str(_require(manifest, "classifier", "classify-tail")), "classifier")
    out_path = Path(str(_require(manifest, "out", "classify-tail")))

    samples = corpus.load_samples(dataset_path)
    classifier = tail.load_classifier(classifier_path)
    verdicts = [tail.classify(classifier, s) for s in samples]
    atomic_write_text(out_path, "".join(
        json.dumps({"id": v.sample_id, "tail": int(v.is_tail)}) + "\n" for v in verdicts
    ))
    write_echo(out_path, "classify-tail", manifest, [dataset_path, classifier_path])
    rejected = sum(v.is_tail for v in verdicts)
    print(f"classify-tail: {rejected}/{len(verdicts)} tail verdicts -> {out_path}")
    return 0


def _resolve_verdicts(
    manifest: dict,
    samples: list[corpus.Sample],
    input_paths: list[Path],
) -> dict[str, tail.TailVerdict] | None:
    if manifest.get("verdicts"):
        verdict_path = _existing_path(str(manifest["verdicts"]), "verdict file")
        input_paths.append(verdict_path)
        return {v.sample_id: v for v in tail.load_external_verdicts(verdict_path)}
    if manifest.get("classifier"):
        classifier_path = _existing_path(str(manifest["classifier"]), "classifier")
        input_paths.append(classifier_path)
        classifier = tail.load_classifier(classifier_path)
        return {s.sample_id: tail.classify(classifier, s) for s in samples}
    return None


def cmd_evaluate(args: argparse.Namespace) -> int:
    keys = [
        "dataset", "predictions", "profile", "verdicts", "classifier",
        "filter", "decision", "theta", "p", "best_model", "use_tail_analyzer",
        "sweep", "policy", "workers", "outcomes_out", "report_out", "table_out",
        "profiling_dataset",
    ]
    manifest = _merge_manifest(args, keys)
    if isinstance(manifest.get("predictions"), list):
        manifest["predictions"] = _parse_predictions_arg(manifest["predictions"])

    dataset_path = _existing_path(str(_require(manifest, "dataset", "evaluate")), "dataset")
    profile_path = _existing_path(str(_require(manifest, "profile", "evaluate")), "profile")
    predictions_spec = _require(manifest, "predictions", "evaluate")
    outcomes_base = Path(str(_require(manifest, "outcomes_out", "evaluate")))
    report_path = Path(str(_require(manifest, "report_out", "evaluate")))
    policy = manifest.get("policy", metrics.POLICY_UNFILTERED_MAJORITY)
    workers = int(manifest.get("workers", 1))

    samples = corpus.load_samples(dataset_path)
    base_profile = profile.load_profile(profile_path)
    predictions_by_model = _load_prediction_files(predictions_spec)
    model_ids = list(predictions_spec)
    input_paths = [dataset_path, profile_path] + [Path(p_) for p_ in predictions_spec.values()]

    cells = resolve_cells(manifest)
    best_model_id = manifest.get("best_model")
    if best_model_id is None and any(c["decision"] == "best_model" for c in cells):
        explicit = None
        if manifest.get("profiling_dataset"):
            prof_path = _existing_path(str(manifest["profiling_dataset"]), "profiling dataset")
            explicit = corpus.load_samples(prof_path)
            input_paths.append(prof_path)
        profiling = _profiling_split(samples, explicit)
        best_model_id = default_best_model(profiling, predictions_by_model, model_ids)

    verdicts_by_id = _resolve_verdicts(manifest, samples, input_paths)

    rows = _evaluate_cells(
        samples=samples, predictions_by_model=predictions_by_model, model_ids=model_ids,
        base_profile=base_profile, cells=cells, manifest=manifest,
        verdicts_by_id=verdicts_by_id, best_model_id=best_model_id,
        outcomes_base=outcomes_base, policy=policy, workers=workers,
    )

    report_doc = {"policy": policy, "models": model_ids, "rows": rows}
    atomic_write_text(report_path, metrics.report_to_json(report_doc))
    table_text = _rows_to_table(rows)
    if manifest.get("table_out"):
        atomic_write_text(Path(str(manifest["table_out"])), table_text)
    write_echo(report_path, "evaluate", manifest, input_paths)
    print(table_text, end="")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    keys = ["outdir", "rq1", "filter", "decision", "theta", "p", "use_tail_analyzer",
            "sweep", "policy", "workers", "seed"]
    manifest = _merge_manifest(args, keys)
    if "synth" not in manifest:
        defaults = json.loads(json.dumps(DEFAULT_DEMO_MANIFEST))  # deep copy
        defaults.update(manifest)
        manifest = defaults
    if manifest.get("seed") is not None:
        manifest["synth"]["seed"] = int(manifest["seed"])

    outdir = Path(str(_require(manifest, "outdir", "synth")))
    synth_cfg = synth.SynthConfig(
        num_methods=int(manifest["synth"]["num_methods"]),
        num_samples=int(manifest["synth"]["num_samples"]),
        zipf_exponent=float(manifest["synth"].get("zipf_exponent", 1.1)),
        sequence_length_range=tuple(manifest["synth"].get("sequence_length_range", (1, 4))),
        p=float(manifest["synth"].get("p", 50.0)),
        seed=int(manifest["synth"].get("seed", 0)),
    )
    specs = [
        synth.SyntheticModelSpec(
            model_id=str(m["model_id"]),
            head_accuracy=float(m["head_accuracy"]),
            tail_accuracy=float(m["tail_accuracy"]),
            error_mode=str(m.get("error_mode", synth.ERROR_SUBSTITUTE)),
            correlation_group=m.get("correlation_group"),
        )
        for m in _require(manifest, "models", "synth")
    ]

    samples = synth.generate_corpus(synth_cfg)
    counts = profile.count_frequencies(samples)
    true_flags = profile.assign_tail_flags(counts, synth_cfg.p)

    outdir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(outdir / "corpus.jsonl", corpus.dump_samples(samples))

    predictions_by_model: dict[str, list[corpus.PredictionRecord]] = {}
    for spec in specs:
        records = synth.simulate_model(spec, samples, true_flags, synth_cfg.seed)
        predictions_by_model[spec.model_id] = records
        atomic_write_text(outdir / f"predictions_{spec.model_id}.jsonl",
                          corpus.dump_predictions(records))

    # profile on the first half, evaluate on the held-out second half
    profiling = samples[: len(samples) // 2]
    held_out = samples[len(samples) // 2:]
    profiling_ids = {s.sample_id for s in profiling}
    built = profile.build_profile(
        profiling,
        {m: _restrict_to(r, profiling_ids) for m, r in predictions_by_model.items()},
        synth_cfg.p,
    )
    profile_path = outdir / "profile.jsonl"
    atomic_write_text(profile_path, profile.dump_profile(built))

    # synthetic gate verdicts are the true labels
    verdicts_by_id = {
        s.sample_id: tail.TailVerdict(s.sample_id, bool(s.tail_label), tail.SOURCE_EXTERNAL)
        for s in held_out
    }

    model_ids = [spec.model_id for spec in specs]
    policy = manifest.get("policy", metrics.POLICY_UNFILTERED_MAJORITY)
    workers = int(manifest.get("workers", 1))
    best_model_id = manifest.get("best_model") or default_best_model(
        profiling, predictions_by_model, model_ids
    )

    eval_manifest = dict(manifest)
    if manifest.get("rq1"):
        # gated vs ungated under no filtering: the tail gate's lone effect
        rows = []
        for gated in (False, True):
            eval_manifest.update({"filter": "none", "decision": "simple_rejection",
                                  "use_tail_analyzer": gated})
            rows += _evaluate_cells(
                samples=held_out, predictions_by_model=predictions_by_model,
                model_ids=model_ids, base_profile=built,
                cells=[{"filter": "none", "decision": "simple_rejection",
                        "p": synth_cfg.p, "theta": float(manifest.get("theta", 0.9))}],
                manifest=eval_manifest, verdicts_by_id=verdicts_by_id,
                best_model_id=best_model_id,
                outcomes_base=outdir / ("outcomes_gated.jsonl" if gated else "outcomes_ungated.jsonl"),
                policy=policy, workers=workers,
            )
    else:
        cells = resolve_cells(manifest)
        rows = _evaluate_cells(
            samples=held_out, predictions_by_model=predictions_by_model,
            model_ids=model_ids, base_profile=built, cells=cells,
            manifest=eval_manifest, verdicts_by_id=verdicts_by_id,
            best_model_id=best_model_id,
            outcomes_base=outdir / "outcomes.jsonl", policy=policy, workers=workers,
        )

    report_doc = {
        "seed": synth_cfg.seed,
        "synth": {
            "num_methods": synth_cfg.num_methods,
            "num_samples": synth_cfg.num_samples,
            "zipf_exponent": synth_cfg.zipf_exponent,
            "sequence_length_range": list(synth_cfg.sequence_length_range),
            "p": synth_cfg.p,
        },
        "models": [
            {"model_id": s.model_id, "head_accuracy": s.head_accuracy,
             "tail_accuracy": s.tail_accuracy, "error_mode": s.error_mode,
             "correlation_group": s.correlation_group}
            for s in specs
        ],
        "policy": policy,
        "rows": rows,
    }
    report_path = outdir / "report.json"
    atomic_write_text(report_path, metrics.report_to_json(report_doc))
    atomic_write_text(outdir / "report.txt", _rows_to_table(rows))
    write_echo(report_path, "synth", manifest, [])
    print(_rows_to_table(rows), end="")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    keys = ["outcomes", "dataset", "predictions", "policy", "report_out", "table_out",
            "filter", "decision"]
    manifest = _merge_manifest(args, keys)
    if isinstance(manifest.get("predictions"), list):
        manifest["predictions"] = _parse_predictions_arg(manifest["predictions"])

    outcomes_path = _existing_path(str(_require(manifest, "outcomes", "report")), "outcomes")
    dataset_path = _existing_path(str(_require(manifest, "dataset", "report")), "dataset")
    predictions_spec = _require(manifest, "predictions", "report")
    report_path = Path(str(_require(manifest, "report_out", "report")))
    policy = manifest.get("policy", metrics.POLICY_UNFILTERED_MAJORITY)

    samples = corpus.load_samples(dataset_path)
    outcomes = ensemble.load_outcomes(outcomes_path)
    predictions_by_model = _load_prediction_files(predictions_spec)
    model_ids = list(predictions_spec)
    indexed = {m: ensemble.index_predictions(predictions_by_model[m]) for m in model_ids}
    raw_by_id = {
        s.sample_id: [
            indexed[m][s.sample_id].parsed if s.sample_id in indexed[m] else corpus.ApiSequence()
            for m in model_ids
        ]
        for s in samples
    }
    report = metrics.compute_report(outcomes, samples, raw_by_id, policy)
    row = {
        "filter": manifest.get("filter", "-"),
        "decision": manifest.get("decision", "-"),
        "use_tail_analyzer": False,
        **report.to_dict(),
    }
    report_doc = {"policy": policy, "models": model_ids, "rows": [row]}
    atomic_write_text(report_path, metrics.report_to_json(report_doc))
    table_text = _rows_to_table([row])
    if manifest.get("table_out"):
        atomic_write_text(Path(str(manifest["table_out"])), table_text)
    input_paths = [outcomes_path, dataset_path] + [Path(p_) for p_ in predictions_spec.values()]
    write_echo(report_path, "report", manifest, input_paths)
    print(table_text, end="")
    return 0


# --------------------------------------------------------------------------- #
# Argument parsing                                                             #
# --------------------------------------------------------------------------- #

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tailvote",
        description="Reliability toolkit for N-version API method sequence recommendation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--manifest", help="JSON manifest supplying any option; flags override")

    p_profile = sub.add_parser("profile", help="build and persist a model profile")
    add_common(p_profile)
    p_profile.add_argument("--dataset", help="evaluation dataset (JSONL)")
    p_profile.add_argument("--profiling-dataset", dest="profiling_dataset",
                           help="explicit profiling dataset; default is the first half of --dataset")
    p_profile.add_argument("--predictions", nargs="+", metavar="MODEL=PATH")
    p_profile.add_argument("--p", type=float, help="tail threshold percentage (default 50)")
    p_profile.add_argument("--out", help="profile output path")
    p_profile.set_defaults(func=cmd_profile)

    p_train = sub.add_parser("train-tail", help="train the baseline tail classifier")
    add_common(p_train)
    p_train.add_argument("--dataset")
    p_train.add_argument("--profile", help="profile used to derive labels when the dataset has none")
    p_train.add_argument("--alpha", type=float, help="additive smoothing (default 1.0)")
    p_train.add_argument("--out", help="classifier output path")
    p_train.set_defaults(func=cmd_train_tail)

    p_classify = sub.add_parser("classify-tail", help="emit tail verdicts for a dataset")
    add_common(p_classify)
    p_classify.add_argument("--dataset")
    p_classify.add_argument("--classifier")
    p_classify.add_argument("--out", help="verdict output path")
    p_classify.set_defaults(func=cmd_classify_tail)

    p_eval = sub.add_parser("evaluate", help="run the pipeline and report TAR/RR/FRR")
    add_common(p_eval)
    p_eval.add_argument("--dataset")
    p_eval.add_argument("--predictions", nargs="+", metavar="MODEL=PATH")
    p_eval.add_argument("--profile")
    p_eval.add_argument("--verdicts", help="external tail verdict file")
    p_eval.add_argument("--classifier", help="baseline classifier used to produce verdicts")
    p_eval.add_argument("--filter", choices=list(ensemble.FILTER_KINDS))
    p_eval.add_argument("--decision", choices=list(ensemble.DECISION_RULES))
    p_eval.add_argument("--theta", type=float)
    p_eval.add_argument("--p", type=float)
    p_eval.add_argument("--best-model", dest="best_model")
    p_eval.add_argument("--use-tail-analyzer", dest="use_tail_analyzer",
                        action="store_const", const=True)
    p_eval.add_argument("--workers", type=int)
    p_eval.add_argument("--policy", choices=list(metrics.POLICIES))
    p_eval.add_argument("--outcomes-out", dest="outcomes_out")
    p_eval.add_argument("--report-out", dest="report_out")
    p_eval.add_argument("--table-out", dest="table_out")
    p_eval.add_argument("--profiling-dataset", dest="profiling_dataset")
    p_eval.set_defaults(func=cmd_evaluate)

    p_synth = sub.add_parser("synth", help="generate a synthetic corpus and evaluate it")
    add_common(p_synth)
    p_synth.add_argument("--outdir")
    p_synth.add_argument("--seed", type=int)
    p_synth.add_argument("--rq1", action="store_const", const=True,
                         help="compare gated vs ungated runs without filtering")
    p_synth.add_argument("--filter", choices=list(ensemble.FILTER_KINDS))
    p_synth.add_argument("--decision", choices=list(ensemble.DECISION_RULES))
    p_synth.add_argument("--theta", type=float)
    p_synth.add_argument("--use-tail-analyzer", dest="use_tail_analyzer",
                         action="store_const", const=True)
    p_synth.add_argument("--workers", type=int)
    p_synth.add_argument("--policy", choices=list(metrics.POLICIES))
    p_synth.set_defaults(func=cmd_synth)

    p_report = sub.add_parser("report", help="recompute metrics from an outcome file")
    add_common(p_report)
    p_report.add_argument("--outcomes")
    p_report.add_argument("--dataset")
    p_report.add_argument("--predictions", nargs="+", metavar="MODEL=PATH")
    p_report.add_argument("--policy", choices=list(metrics.POLICIES))
    p_report.add_argument("--report-out", dest="report_out")
    p_report.add_argument("--table-out", dest="table_out")
    p_report.set_defaults(func=cmd_report)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
