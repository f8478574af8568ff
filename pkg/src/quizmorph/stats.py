"""Dataset summary statistics over sentence counts and split labels."""

import statistics
from collections import Counter
from dataclasses import dataclass

from .annotation import split_sentences
from .common import Diagnostics, PipelineError
from .ingest import Split


@dataclass(frozen=True)
class SentenceCountSummary:
    sample_count: int
    mean: float
    median: float
    mode: float


def sentence_count_stats(texts):
    """Mean, median, and mode of per-question sentence counts."""
    if not texts:
        raise PipelineError("no questions to summarize")
    counts = [len(split_sentences(text)) for text in texts]
    frequency = Counter(counts)
    top = max(frequency.values())
    mode = min(count for count, seen in frequency.items() if seen == top)
    return SentenceCountSummary(
        sample_count=len(counts),
        mean=sum(counts) / len(counts),
        median=float(statistics.median(counts)),
        mode=float(mode),
    )


def split_summary(records, diagnostics=None):
    """Count records per split label; unlabeled records count as unsplit."""
    diagnostics = diagnostics if diagnostics is not None else Diagnostics()
    counts = {split.value: 0 for split in Split}
    for record in records:
        label = getattr(record, "split", None)
        if isinstance(label, Split):
            label = label.value
        if label not in counts:
            identity = getattr(record, "id", "?")
            diagnostics.warn("stats", identity, "missing split label, counted as unsplit")
            label = Split.UNSPLIT.value
        counts[label] += 1
    return counts
