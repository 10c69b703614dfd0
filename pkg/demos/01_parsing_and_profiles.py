"""Parsing raw model output and building a model profile.

Walks through the two foundations: normalizing messy model output into
canonical method sequences, and profiling per-model accuracy per method.
"""

from tailvote import (
    assign_tail_flags,
    build_profile,
    count_frequencies,
    method_accuracy,
    parse_api_sequence,
)
from tailvote.corpus import PredictionRecord, Sample

# --- 1. Raw output text becomes a canonical sequence ------------------------
raw = "new File(path) -> java.io.File.<init> ; BufferedReader.readLine()"
print("raw:   ", raw)
print("parsed:", parse_api_sequence(raw).canonicals)
# package qualifiers collapse, call syntax is stripped, junk tokens drop out

# --- 2. A tiny labeled corpus ------------------------------------------------
def sample(i, truth):
    seq = parse_api_sequence(truth)
    return Sample(f"s{i}", f"query {i}", "void f() {}", seq)

samples = [
    sample(0, "List.add List.add String.valueOf"),
    sample(1, "List.add File.exists"),
    sample(2, "String.valueOf List.add"),
    sample(3, "File.exists Scanner.nextLine"),
]

counts = count_frequencies(samples)
print("\nfrequencies:", dict(sorted(counts.items(), key=lambda kv: -kv[1])))
print("flags at p=50:", assign_tail_flags(counts, 50))

# --- 3. Two models' predictions feed the profile -----------------------------
def prediction(i, model, output):
    return PredictionRecord(f"s{i}", model, output, parse_api_sequence(output))

predictions = {
    "strong": [
        prediction(0, "strong", "List.add List.add String.valueOf"),
        prediction(1, "strong", "List.add File.exists"),
        prediction(2, "strong", "String.valueOf List.add"),
        prediction(3, "strong", "File.exists Scanner.nextLine"),
    ],
    "noisy": [
        prediction(0, "noisy", "List.add Ghost.method"),
        prediction(1, "noisy", "List.add List.add"),
        prediction(2, "noisy", "String.valueOf"),
        prediction(3, "noisy", "Scanner.nextLine Scanner.close"),
    ],
}

profile = build_profile(samples, predictions, p=50)
print("\nper-method ledger (frequency, flag, per-model rec/correct):")
for name, entry in profile.entries.items():
    stats = {m: (s.recommendations, s.correct) for m, s in entry.per_model.items()}
    print(f"  {name:<22} n={entry.frequency}  {entry.tail_flag}  {stats}")

print("\naccuracy of 'noisy' on List.add:",
      method_accuracy(profile, "noisy", "List.add"))
print("accuracy on a method it never emitted:",
      method_accuracy(profile, "noisy", "File.exists"))
