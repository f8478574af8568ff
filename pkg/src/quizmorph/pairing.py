"""Semantic similarity scoring and threshold filtering for candidate pairs."""

import math
import re
from collections import Counter
from dataclasses import dataclass

from .annotation import segment_sentences
from .common import Diagnostics, PipelineError


@dataclass(frozen=True)
class QuestionPair:
    qb_id: str
    nq_id: str
    normalized_answer: str
    similarity: float
    provider: str


def last_sentence(text):
    """Final sentence of a question, as segmented by the sentence splitter.

    Returns the raw segment, so single-sentence input comes back unchanged.
    """
    sentences = segment_sentences(text)
    if not sentences:
        raise PipelineError(f"no sentences found in {text!r}")
    return sentences[-1]


def cosine(u, v):
    if len(u) != len(v):
        raise PipelineError(f"cosine dimensions differ: {len(u)} vs {len(v)}")
    norm_u = math.sqrt(sum(x * x for x in u))
    norm_v = math.sqrt(sum(x * x for x in v))
    if norm_u == 0.0 or norm_v == 0.0:
        raise PipelineError("cosine undefined for zero vector")
    value = sum(x * y for x, y in zip(u, v)) / (norm_u * norm_v)
    return max(-1.0, min(1.0, value))


class LexicalProvider:
    """TF-IDF unigram embeddings; document frequency comes from each batch."""

    label = "lexical"

    def embed(self, texts):
        tokenized = [re.findall(r"\w+", text.lower()) for text in texts]
        vocabulary = sorted({word for tokens in tokenized for word in tokens})
        if not vocabulary:
            return [[0.0] for _ in texts]
        index = {word: i for i, word in enumerate(vocabulary)}
        frequency = Counter(word for tokens in tokenized for word in set(tokens))
        count = len(texts)
        idf = {
            word: math.log((1 + count) / (1 + frequency[word])) + 1.0
            for word in vocabulary
        }
        vectors = []
        for tokens in tokenized:
            vector = [0.0] * len(vocabulary)
            for word, occurrences in Counter(tokens).items():
                vector[index[word]] = occurrences * idf[word]
            vectors.append(vector)
        return vectors


def provider_label(provider):
    return getattr(provider, "label", type(provider).__name__.lower())


def score_pairs(pairs, provider, batch_size=64, diagnostics=None):
    """Attach a similarity to every candidate pair, preserving input order."""
    diagnostics = diagnostics if diagnostics is not None else Diagnostics()
    label = provider_label(provider)
    pairs_per_batch = max(1, batch_size // 2)
    scored = []
    for batch_start in range(0, len(pairs), pairs_per_batch):
        batch = pairs[batch_start : batch_start + pairs_per_batch]
        texts = []
        for pair in batch:
            texts.append(last_sentence(pair.qb_text))
            texts.append(pair.nq_text)
        try:
            vectors = provider.embed(texts)
        except Exception as exc:
            raise PipelineError(
                f"similarity provider failed on batch starting at pair {batch_start}: {exc}"
            ) from exc
        if len(vectors) != len(texts):
            raise PipelineError(
                f"provider returned {len(vectors)} vectors for {len(texts)} texts"
            )
        for offset, pair in enumerate(batch):
            u, v = vectors[2 * offset], vectors[2 * offset + 1]
            try:
                similarity = cosine(u, v)
            except PipelineError:
                diagnostics.warn(
                    "pairing", f"{pair.qb_id}/{pair.nq_id}",
                    "degenerate embedding; similarity set to 0.0",
                )
                similarity = 0.0
            scored.append(
                QuestionPair(
                    qb_id=pair.qb_id,
                    nq_id=pair.nq_id,
                    normalized_answer=pair.normalized_answer,
                    similarity=similarity,
                    provider=label,
                )
            )
    return scored


def filter_pairs(pairs, provider, threshold=0.5, batch_size=64, diagnostics=None):
    """Keep pairs whose similarity reaches the threshold (boundary inclusive)."""
    if not -1.0 <= threshold <= 1.0:
        raise PipelineError(f"pair threshold {threshold} outside [-1, 1]")
    scored = score_pairs(pairs, provider, batch_size=batch_size, diagnostics=diagnostics)
    return [pair for pair in scored if pair.similarity >= threshold]
