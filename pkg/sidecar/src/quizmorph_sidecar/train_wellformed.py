"""Offline trainer producing the well-formedness classifier checkpoint."""

import argparse
import json
import math
import sys
from importlib import resources

from .wellformed import FEATURE_NAMES, features


def load_annotations(path):
    """Read annotated questions: one {"text", "score"} object per line."""
    records = []
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            score = float(record["score"])
            if not 0.0 <= score <= 1.0:
                raise ValueError(f"{path}:{line_number}: score {score} outside [0, 1]")
            records.append((record["text"], score))
    if not records:
        raise ValueError(f"{path}: no annotated questions")
    return records


def train(records, epochs, learning_rate):
    """Fit logistic weights by full-batch gradient descent from zero init."""
    matrix = [features(text) for text, _ in records]
    targets = [score for _, score in records]
    count = len(records)
    weights = [0.0] * len(FEATURE_NAMES)
    bias = 0.0
    for _ in range(epochs):
        gradient = [0.0] * len(weights)
        bias_gradient = 0.0
        for row, target in zip(matrix, targets):
            value = bias + sum(w * x for w, x in zip(weights, row))
            predicted = 1.0 / (1.0 + math.exp(-max(-60.0, min(60.0, value))))
            error = predicted - target
            for index, x in enumerate(row):
                gradient[index] += error * x
            bias_gradient += error
        weights = [
            w - learning_rate * g / count for w, g in zip(weights, gradient)
        ]
        bias -= learning_rate * bias_gradient / count
    return weights, bias


def cross_entropy(records, weights, bias):
    total = 0.0
    for text, target in records:
        value = bias + sum(w * x for w, x in zip(weights, features(text)))
        predicted = 1.0 / (1.0 + math.exp(-max(-60.0, min(60.0, value))))
        predicted = min(max(predicted, 1e-12), 1.0 - 1e-12)
        total -= target * math.log(predicted) + (1.0 - target) * math.log(
            1.0 - predicted
        )
    return total / len(records)


def default_data_path():
    path = resources.files("quizmorph_sidecar").joinpath(
        "data/wellformed_annotations.jsonl"
    )
    return str(path)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="train-wellformed",
        description="Train the well-formedness scorer and save a checkpoint.",
    )
    parser.add_argument("--data", default=None, help="annotated questions JSONL")
    parser.add_argument("--out", required=True, help="checkpoint JSON to write")
    parser.add_argument("--epochs", type=int, default=600)
    parser.add_argument("--learning-rate", type=float, default=0.5)
    args = parser.parse_args(argv)

    try:
        records = load_annotations(args.data or default_data_path())
        weights, bias = train(records, args.epochs, args.learning_rate)
    except (OSError, ValueError, KeyError) as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return 1

    checkpoint = {
        "bias": round(bias, 12),
        "epochs": args.epochs,
        "feature_names": list(FEATURE_NAMES),
        "learning_rate": args.learning_rate,
        "model": "wellformed-logistic",
        "version": 1,
        "weights": [round(weight, 12) for weight in weights],
    }
    with open(args.out, "w", encoding="utf-8") as handle:
        json.dump(checkpoint, handle, indent=2, sort_keys=True)
        handle.write("\n")

    loss = cross_entropy(records, weights, bias)
    high = [s for _, s in records if s > 0.5]
    print(
        f"trained on {len(records)} questions ({len(high)} well-formed), "
        f"cross-entropy {loss:.4f}, checkpoint {args.out}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
