"""The tail gate: rejecting inputs whose recommendation would be unreliable.

Generates a long-tail corpus, trains the baseline classifier on derived
labels, and shows how gating lifts the accuracy of accepted outputs for a
single model that is weak on tail cases.
"""

from tailvote import (
    PipelineConfig,
    SynthConfig,
    SyntheticModelSpec,
    assign_tail_flags,
    build_profile,
    classify,
    compute_report,
    count_frequencies,
    evaluate_classifier,
    generate_corpus,
    run_dataset,
    simulate_model,
    train_baseline,
)
from tailvote.ensemble import index_predictions

# --- 1. A corpus whose method usage follows a Zipf law -----------------------
config = SynthConfig(num_methods=200, num_samples=4000, zipf_exponent=1.1,
                     sequence_length_range=(1, 3), p=50.0, seed=42)
samples = generate_corpus(config)
tail_share = sum(s.tail_label for s in samples) / len(samples)
print(f"corpus: {len(samples)} samples, {tail_share:.1%} tail cases")

# --- 2. Train the baseline classifier on the first half ----------------------
train, test = samples[:2000], samples[2000:]
clf = train_baseline(train, [s.tail_label for s in train])
verdicts = [classify(clf, s) for s in test]
print(f"baseline tail classifier accuracy: {evaluate_classifier(verdicts, test):.1%}")

# --- 3. One model, strong on head inputs, weak on tail -----------------------
flags = assign_tail_flags(count_frequencies(samples), 50.0)
model = SyntheticModelSpec("solo", head_accuracy=0.65, tail_accuracy=0.12)
records = simulate_model(model, samples, flags, seed=42)
train_ids = {s.sample_id for s in train}
profile = build_profile(train, {"solo": [r for r in records if r.sample_id in train_ids]}, 50.0)
preds = {"solo": index_predictions(records)}
raw = {s.sample_id: [preds["solo"][s.sample_id].parsed] for s in test}

ungated = run_dataset(test, preds, PipelineConfig(model_ids=("solo",)), profile)
report_ungated = compute_report(ungated, test, raw)

verdicts_by_id = {v.sample_id: v for v in verdicts}
gated = run_dataset(test, preds,
                    PipelineConfig(model_ids=("solo",), use_tail_analyzer=True),
                    profile, verdicts_by_id)
report_gated = compute_report(gated, test, raw)

print(f"\nungated: TAR {report_ungated.tar:.1%}  RR {report_ungated.rr:.1%}")
print(f"gated:   TAR {report_gated.tar:.1%}  RR {report_gated.rr:.1%} "
      f"FRR {report_gated.frr:.1%}")
print("\nthe gate trades availability (higher RR) for reliability (higher TAR)")
