"""Well-formedness scoring and the filtering gate for generated questions."""

from .common import PipelineError

_QUESTION_STARTERS = {
    "who", "what", "which", "when", "where", "why", "how", "whose", "whom",
    "is", "are", "was", "were", "do", "does", "did", "can", "could", "will",
    "would", "should", "may", "might", "must", "has", "have", "had",
}

_UNRESOLVED_REFERENCES = {"it", "its", "this", "these", "he", "she", "they"}

_FUNCTION_WORDS = {
    "a", "an", "the", "and", "but", "or", "nor", "so", "yet", "for", "of",
    "to", "in", "on", "at", "by", "with", "from", "as", "that", "which",
    "who", "whom", "whose", "this", "these", "those", "it", "its", "is",
    "are", "was", "were", "be", "been", "being", "not", "no",
}

_VERB_LEXICON = {
    "is", "are", "was", "were", "be", "been", "being", "has", "have", "had",
    "do", "does", "did", "includes", "include", "included", "represents",
    "represent", "represented", "meets", "meet", "met", "ends", "end",
    "ended", "named", "name", "names", "moved", "move", "moves", "wrote",
    "write", "writes", "written", "developed", "develop", "develops",
    "signed", "sign", "signs", "borders", "border", "bordered", "flows",
    "flow", "flowed", "premiered", "premiere", "premieres", "carries",
    "carry", "carried", "spreads", "spread", "denotes", "denote", "denoted",
    "pulls", "pull", "pulled", "makes", "make", "made", "toppled", "topple",
    "won", "win", "wins", "led", "lead", "leads", "became", "become",
    "becomes", "ruled", "rule", "rules", "founded", "found", "founds",
    "painted", "paint", "paints", "composed", "compose", "composes",
    "discovered", "discover", "discovers", "invented", "invent", "invents",
    "defeated", "defeat", "defeats", "produces", "produce", "produced",
    "converts", "convert", "converted", "formulated", "formulate", "stormed",
    "storm", "begins", "begin", "began", "describes", "describe",
    "described", "lies", "lie", "lay", "rises", "rise", "rose", "holds",
    "hold", "held", "acts", "act", "acted", "uses", "use", "used",
}


def heuristic_score(text):
    """Additive well-formedness score in [0, 1] from surface cues."""
    tokens = text.split()
    if not tokens:
        raise PipelineError("cannot score empty text")
    lower = [token.lower() for token in tokens]
    score = 0.0
    if lower[0] in _QUESTION_STARTERS:
        score += 0.4
    if not any(token in _UNRESOLVED_REFERENCES for token in lower):
        score += 0.2
    if 5 <= len(tokens) <= 30:
        score += 0.2
    final = lower[-1]
    if final == "?" or (any(ch.isalnum() for ch in final) and final not in _FUNCTION_WORDS):
        score += 0.1
    if any(token in _VERB_LEXICON for token in lower):
        score += 0.1
    # Sums of 0.1 multiples drift in float arithmetic; keep scores on the grid.
    return round(min(score, 1.0), 6)


class HeuristicScorer:
    """Scores batches of question texts with the surface-cue rubric."""

    label = "heuristic"

    def score(self, texts):
        return [heuristic_score(text) for text in texts]


def filter_wellformed(questions, scorer, threshold=0.5, batch_size=64):
    """Score every question, keep those strictly above the threshold.

    All questions get their quality_score set; the returned list preserves
    input order and contains only the retained ones.
    """
    if not 0.0 <= threshold <= 1.0:
        raise PipelineError(f"quality threshold {threshold} outside [0, 1]")
    if batch_size < 1:
        raise PipelineError(f"batch size {batch_size} must be positive")
    retained = []
    for start in range(0, len(questions), batch_size):
        batch = questions[start : start + batch_size]
        texts = [question.text for question in batch]
        try:
            scores = scorer.score(texts)
        except PipelineError:
            raise
        except Exception as exc:
            raise PipelineError(f"scorer failed on batch starting at {start}: {exc}") from exc
        if len(scores) != len(texts):
            raise PipelineError(
                f"scorer returned {len(scores)} scores for {len(texts)} texts"
            )
        for question, score in zip(batch, scores):
            if not 0.0 <= score <= 1.0:
                raise PipelineError(f"score {score} outside [0, 1] for {question.id}")
            question.quality_score = score
            if score > threshold:
                retained.append(question)
    return retained


def rule_fingerprint():
    """Stable digest input describing the frozen scoring rubric."""
    parts = [
        "starters=" + ",".join(sorted(_QUESTION_STARTERS)),
        "unresolved=" + ",".join(sorted(_UNRESOLVED_REFERENCES)),
        "function=" + ",".join(sorted(_FUNCTION_WORDS)),
        "verbs=" + ",".join(sorted(_VERB_LEXICON)),
        "weights=0.4,0.2,0.2,0.1,0.1",
    ]
    return ";".join(parts)
