"""Answer-level and text-level evaluation metrics."""

import math
import re
from collections import Counter
from dataclasses import dataclass

from .common import PipelineError
from .ingest import normalize_answer


@dataclass(frozen=True)
class EvalRecord:
    id: str
    prediction: str
    references: tuple


def _normalize(text):
    """Answer normalization that maps fully-stripped text to the empty string."""
    try:
        return normalize_answer(text)
    except PipelineError:
        return ""


def exact_match(prediction, references):
    """1.0 when the normalized prediction equals any normalized reference."""
    if not references:
        raise PipelineError("exact match needs at least one reference")
    normalized = _normalize(prediction)
    return float(any(normalized == _normalize(reference) for reference in references))


def token_prf(prediction, references):
    """Bag-of-tokens precision, recall, and F1 against the best reference."""
    if not references:
        raise PipelineError("token overlap needs at least one reference")
    predicted = _normalize(prediction).split()
    best = (0.0, 0.0, 0.0)
    for reference in references:
        expected = _normalize(reference).split()
        if not predicted or not expected:
            value = float(predicted == expected)
            candidate = (value, value, value)
        else:
            overlap = sum((Counter(predicted) & Counter(expected)).values())
            if overlap == 0:
                candidate = (0.0, 0.0, 0.0)
            else:
                precision = overlap / len(predicted)
                recall = overlap / len(expected)
                candidate = (
                    precision,
                    recall,
                    2 * precision * recall / (precision + recall),
                )
        if candidate[2] > best[2] or (candidate[2] == best[2] and candidate > best):
            best = candidate
    return best


def bleu_tokenize(text):
    """Lowercase, isolate punctuation, and split on whitespace."""
    return re.sub(r"([^\w\s])", r" \1 ", text.lower()).split()


def corpus_bleu(predictions, references, max_order=4):
    """Corpus-level BLEU with exponential smoothing of zero n-gram counts.

    Counts are pooled over the corpus before taking precisions. Each n-gram
    order with zero matches contributes 1 / (2^k * hyp_len) where k counts the
    zero orders seen so far. Brevity penalty uses total tokenized lengths. The
    score is scaled to 0..100.
    """
    if len(predictions) != len(references):
        raise PipelineError(
            f"{len(predictions)} predictions against {len(references)} references"
        )
    if not predictions:
        raise PipelineError("empty corpus")
    matches = [0] * max_order
    totals = [0] * max_order
    hyp_len = 0
    ref_len = 0
    for prediction, reference in zip(predictions, references):
        hyp_tokens = bleu_tokenize(prediction)
        ref_tokens = bleu_tokenize(reference)
        hyp_len += len(hyp_tokens)
        ref_len += len(ref_tokens)
        for order in range(1, max_order + 1):
            hyp_grams = Counter(
                tuple(hyp_tokens[i : i + order])
                for i in range(len(hyp_tokens) - order + 1)
            )
            ref_grams = Counter(
                tuple(ref_tokens[i : i + order])
                for i in range(len(ref_tokens) - order + 1)
            )
            matches[order - 1] += sum((hyp_grams & ref_grams).values())
            totals[order - 1] += max(len(hyp_tokens) - order + 1, 0)
    if hyp_len == 0:
        return 0.0
    smooth_zeros = 0
    log_sum = 0.0
    for order in range(max_order):
        if matches[order] > 0 and totals[order] > 0:
            precision = matches[order] / totals[order]
        else:
            smooth_zeros += 1
            precision = 1.0 / (2 ** smooth_zeros * hyp_len)
        log_sum += math.log(precision)
    geometric = math.exp(log_sum / max_order)
    brevity = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * brevity * geometric


def evaluate(records):
    """Aggregate exact match, token overlap, and BLEU over evaluation records."""
    if not records:
        raise PipelineError("no records to evaluate")
    accuracy = 0.0
    precision = 0.0
    recall = 0.0
    f1 = 0.0
    for record in records:
        accuracy += exact_match(record.prediction, record.references)
        p, r, f = token_prf(record.prediction, record.references)
        precision += p
        recall += r
        f1 += f
    count = len(records)
    bleu = corpus_bleu(
        [record.prediction for record in records],
        [record.references[0] for record in records],
    )
    return {
        "sample_count": count,
        "accuracy": accuracy / count,
        "precision": precision / count,
        "recall": recall / count,
        "f1": f1 / count,
        "corpus_bleu": bleu,
    }
