"""The command-line workflow, end to end, in a temp directory.

synth generates a corpus plus simulated predictions and evaluates them;
profile/evaluate then re-run the same data explicitly, sweeping filters.
Every output lands next to a manifest echo that can replay the run.
"""

import json
import tempfile
from pathlib import Path

from tailvote.cli import main

with tempfile.TemporaryDirectory() as tmp:
    root = Path(tmp)

    # --- 1. One-command synthetic experiment (the default demo config) ------
    run = root / "run"
    assert main(["synth", "--outdir", str(run), "--seed", "99"]) == 0
    print("\nsynth artifacts:", sorted(p.name for p in run.iterdir()))

    # --- 2. Rebuild a profile from the emitted wire-format files ------------
    dataset = run / "corpus.jsonl"
    preds = [f"m{i}={run / f'predictions_m{i}.jsonl'}" for i in (1, 2, 3)]
    profile_path = root / "profile.jsonl"
    assert main(["profile", "--dataset", str(dataset),
                 "--predictions", *preds, "--out", str(profile_path)]) == 0

    # --- 3. Sweep filters in one invocation ----------------------------------
    manifest = {
        "dataset": str(dataset),
        "predictions": {f"m{i}": str(run / f"predictions_m{i}.jsonl") for i in (1, 2, 3)},
        "profile": str(profile_path),
        "decision": "simple_rejection",
        "sweep": {"filter": ["none", "R", "H", "RH"]},
        "outcomes_out": str(root / "outcomes.jsonl"),
        "report_out": str(root / "report.json"),
    }
    manifest_path = root / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2))
    assert main(["evaluate", "--manifest", str(manifest_path)]) == 0

    # --- 4. The echo makes the run replayable --------------------------------
    echo = json.loads((root / "report.echo.json").read_text())
    print("echo inputs hashed:", len(echo["input_hashes"]))
    rows = json.loads((root / "report.json").read_text())["rows"]
    print("sweep rows:", [(r["filter"], round(r["rr"], 3)) for r in rows])
