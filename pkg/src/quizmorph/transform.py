"""Clause splitting, pronoun substitution, merging, cleanup, and wh-rewriting."""

import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources

from .annotation import Token
from .common import Diagnostics, PipelineError


class BoundaryCause(Enum):
    ADVCL = "Advcl"
    CONJ_CC = "ConjCC"
    WHOLE = "Whole"


@dataclass
class ClauseSplit:
    tokens: list
    sentence_index: int
    split_index: int
    boundary_cause: BoundaryCause


@dataclass
class GeneratedQuestion:
    text: str
    source_question_id: str
    sentence_index: int
    split_index: int
    is_last_sentence: bool
    answer: str
    split: str = "unsplit"
    quality_score: float = None

    @property
    def id(self):
        return f"{self.source_question_id}-s{self.sentence_index}-c{self.split_index}"


@dataclass
class GenerationOptions:
    last_sentence_only: bool = False
    min_words: int = 8


@dataclass
class WhVocabulary:
    """Maps noun-phrase head lemmas to a wh word; unknown lemmas fall back to what."""

    entries: dict = field(default_factory=dict)
    default: str = "what"

    @classmethod
    def load(cls, path):
        entries = {}
        try:
            handle = open(path, encoding="utf-8")
        except OSError as exc:
            raise PipelineError(f"cannot read vocabulary {path}: {exc}") from exc
        with handle:
            for number, raw in enumerate(handle, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 2 or parts[1] not in ("who", "which", "what"):
                    raise PipelineError(f"bad vocabulary line {path}:{number}: {raw.rstrip()}")
                entries[parts[0].lower()] = parts[1]
        return cls(entries)

    def lookup(self, lemma):
        """Return (wh word, plural) for a head word, trying singular forms on miss."""
        lower = lemma.lower()
        if lower in self.entries:
            return self.entries[lower], False
        for suffix, replacement in (("ies", "y"), ("es", ""), ("s", "")):
            if lower.endswith(suffix) and len(lower) > len(suffix):
                candidate = lower[: -len(suffix)] + replacement
                if candidate in self.entries:
                    return self.entries[candidate], True
        return self.default, False


def load_default_vocabulary():
    path = resources.files("quizmorph").joinpath("data/wh_vocab.tsv")
    return WhVocabulary.load(str(path))


def wh_class_for_noun(head_lemma, vocab):
    """Wh word for a noun-phrase head, defaulting to what on vocabulary miss."""
    if not head_lemma:
        raise PipelineError("empty noun-phrase head")
    wh, _ = vocab.lookup(head_lemma)
    return wh


def _children_map(tokens):
    children = {}
    for token in tokens:
        if 0 <= token.head < len(tokens):
            children.setdefault(token.head, []).append(token.index)
    return children


def _subtree_start(tokens, root_index):
    children = _children_map(tokens)
    seen = set()
    stack = [root_index]
    lowest = root_index
    while stack:
        index = stack.pop()
        if index in seen:
            continue
        seen.add(index)
        lowest = min(lowest, index)
        stack.extend(children.get(index, []))
    return lowest


def split_clauses(ann):
    """Carve a sentence into clause spans at adverbial-clause and verbal-conjunct subtrees.

    The coordinating conjunction directly at a boundary is consumed and joins
    neither side. Conjunct boundaries apply only to verbal conjuncts so that
    coordinated noun phrases stay intact.
    """
    tokens = ann.tokens
    boundaries = {}
    consumed = set()
    for token in tokens:
        if token.deprel == "advcl":
            start = _subtree_start(tokens, token.index)
            if start > 0:
                boundaries.setdefault(start, BoundaryCause.ADVCL)
        elif token.deprel == "conj" and token.upos in ("VERB", "AUX"):
            start = _subtree_start(tokens, token.index)
            if tokens[start].deprel == "cc" and start + 1 < len(tokens) and start >= 1:
                consumed.add(start)
                boundaries.setdefault(start + 1, BoundaryCause.CONJ_CC)
            elif start >= 2 and tokens[start - 1].deprel == "cc":
                consumed.add(start - 1)
                boundaries.setdefault(start, BoundaryCause.CONJ_CC)
            elif start > 0:
                boundaries.setdefault(start, BoundaryCause.CONJ_CC)
    splits = []
    starts = [0] + sorted(boundaries)
    for position, start in enumerate(starts):
        end = starts[position + 1] if position + 1 < len(starts) else len(tokens)
        span = [token for token in tokens[start:end] if token.index not in consumed]
        if not span:
            continue
        cause = BoundaryCause.WHOLE if position == 0 else boundaries[start]
        splits.append(ClauseSplit(span, ann.sentence_index, len(splits), cause))
    return splits


_POSSESSIVE_PRONOUNS = {"its", "his", "her", "their"}


def resolve_pronouns(splits, clusters):
    """Replace clustered pronouns with their representative mention's tokens.

    A pronoun sharing a split with its representative is left alone. Possessive
    pronouns take the representative plus an 's token.
    """
    if not clusters:
        return splits
    resolved = []
    for split in splits:
        indices = {token.index for token in split.tokens}
        replaced = []
        for token in split.tokens:
            substitution = None
            if token.upos == "PRON":
                for cluster in clusters:
                    mention = _covering_mention(cluster, split.sentence_index, token.index)
                    if mention is None or mention.end - mention.start != 1:
                        continue
                    rep = cluster.representative
                    rep_in_split = (
                        rep.sentence_index == split.sentence_index
                        and all(i in indices for i in range(rep.start, rep.end))
                    )
                    if rep_in_split:
                        continue
                    substitution = list(cluster.representative_tokens)
                    if token.surface.lower() in _POSSESSIVE_PRONOUNS:
                        substitution.append("'s")
                    break
            if substitution is None:
                replaced.append(token)
            else:
                for surface in substitution:
                    replaced.append(
                        Token(token.index, surface, "PROPN", token.head, token.deprel)
                    )
        resolved.append(
            ClauseSplit(replaced, split.sentence_index, split.split_index, split.boundary_cause)
        )
    return resolved


def _covering_mention(cluster, sentence_index, token_index):
    for mention in cluster.mentions:
        if mention.covers(sentence_index, token_index):
            return mention
    return None


def _word_count(tokens):
    return sum(1 for token in tokens if any(ch.isalnum() for ch in token.surface))


def merge_short_splits(splits, min_words=8):
    """Fold any split below the word floor into its neighbor until all pass or one remains."""
    merged = list(splits)
    while len(merged) > 1:
        short = next(
            (i for i, split in enumerate(merged) if _word_count(split.tokens) < min_words),
            None,
        )
        if short is None:
            break
        into = 0 if short == 0 else short - 1
        other = 1 if short == 0 else short
        absorbed = ClauseSplit(
            merged[into].tokens + merged[other].tokens,
            merged[into].sentence_index,
            merged[into].split_index,
            merged[into].boundary_cause,
        )
        merged[into : other + 1] = [absorbed]
    return [
        ClauseSplit(split.tokens, split.sentence_index, position, split.boundary_cause)
        for position, split in enumerate(merged)
    ]


_DISALLOWED_FINAL = {
    "and", "but", "or", "nor", "so", "yet", "for", "because", "although",
    "though", "while", "whereas", "which", "that", "with", "of", "to",
    "in", "on", "at", "by",
}


def _clean_tokens(tokens):
    cleaned = list(tokens)
    while cleaned:
        last = cleaned[-1]
        if last == "?":
            break
        if not any(ch.isalnum() for ch in last):
            cleaned.pop()
            continue
        if last.lower() in _DISALLOWED_FINAL:
            cleaned.pop()
            continue
        break
    if not cleaned:
        raise PipelineError("split cleaned to empty")
    return cleaned


def clean_split(text):
    """Strip trailing punctuation and disallowed final words; a terminal ? stays."""
    return " ".join(_clean_tokens(text.split()))


_NONLAST_TABLE = {
    "this": "which",
    "these": "which",
    "it": "what",
    "its": "whose",
}


def rewrite_nonlast(text):
    """Word-table substitutions that turn a declarative clue into a question shape."""
    rewritten = []
    for token in text.split():
        replacement = _NONLAST_TABLE.get(token.lower())
        if replacement is None:
            rewritten.append(token)
            continue
        words = replacement.split()
        if token[:1].isupper():
            words[0] = words[0].capitalize()
        rewritten.extend(words)
    return " ".join(rewritten)


_NUMBER_WORDS = {
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
    "ten", "fifteen", "twenty", "twenty-five", "x",
}
_QUICKNESS_WORDS = {"quickly", "quick", "fast"}
_NAMING_VERBS = {"name", "identify"}
_RELATIVIZERS = {"that", "which", "who", "whom", "whose", "where", "when"}
_FINITE_VERBS = {
    "is", "are", "was", "were", "has", "have", "had", "does", "do", "did",
    "can", "could", "will", "would", "may", "might", "must", "should", "shall",
}
_NP_STOPPERS = _RELATIVIZERS | _FINITE_VERBS | {
    "of", "in", "on", "at", "by", "from", "with", "for", "about", "as",
    "during", "after", "before",
}


def _is_points_count(word):
    return word.isdigit() or word in _NUMBER_WORDS


def _match_template(lower):
    """Locate `for <n> points , name|identify this|these`; returns (start, np_start, dem)."""
    for i, word in enumerate(lower):
        if word == "ftp":
            j = i + 1
        elif (
            word == "for"
            and i + 2 < len(lower)
            and _is_points_count(lower[i + 1])
            and lower[i + 2] == "points"
        ):
            j = i + 3
        else:
            continue
        while j < len(lower) and (lower[j] == "," or lower[j] in _QUICKNESS_WORDS):
            j += 1
        if j + 1 < len(lower) and lower[j] in _NAMING_VERBS and lower[j + 1] in ("this", "these"):
            return i, j + 2, lower[j + 1]
    return None


def _strip_points_phrase(tokens):
    lower = [token.lower() for token in tokens]
    for i, word in enumerate(lower):
        if word == "ftp":
            j = i + 1
        elif (
            word == "for"
            and i + 2 < len(lower)
            and _is_points_count(lower[i + 1])
            and lower[i + 2] == "points"
        ):
            j = i + 3
        else:
            continue
        if j < len(lower) and lower[j] == ",":
            j += 1
        return tokens[:i] + tokens[j:]
    return tokens


def _is_nominal(token):
    return any(ch.isalnum() for ch in token) and token.lower() not in _NP_STOPPERS


def rewrite_last(text, vocab):
    """Rewrite the closing naming formula into a wh question; always ends with ?.

    The formula and demonstrative are replaced by a wh word chosen from the
    vocabulary by the noun-phrase head. A bare noun phrase yields `<wh> is the
    <np>`; a following relative clause is attached directly after dropping the
    relativizer; anything else keeps the tail untouched.
    """
    tokens = text.split()
    lower = [token.lower() for token in tokens]
    match = _match_template(lower)
    if match is None:
        stripped = _strip_points_phrase(tokens)
        rewritten = rewrite_nonlast(" ".join(stripped)).split()
    else:
        start, np_start, demonstrative = match
        rewritten = _apply_template(tokens, start, np_start, demonstrative, vocab)
    if not rewritten or rewritten[-1] != "?":
        rewritten.append("?")
    return " ".join(rewritten)


def _apply_template(tokens, start, np_start, demonstrative, vocab):
    np_end = np_start
    while np_end < len(tokens) and _is_nominal(tokens[np_end]):
        np_end += 1
    if np_end == np_start:
        stripped = _strip_points_phrase(tokens)
        return rewrite_nonlast(" ".join(stripped)).split()
    head = tokens[np_end - 1]
    wh, plural_head = vocab.lookup(head)
    plural = plural_head or demonstrative == "these"
    prefix = tokens[:start]
    noun_phrase = tokens[np_start:np_end]
    rest = tokens[np_end:]
    if rest and rest[0].lower() in ("that", "which", "who", "whom", "whose"):
        rest = rest[1:]
        return prefix + [wh] + noun_phrase + rest
    if rest and rest[0].lower() in _FINITE_VERBS:
        return prefix + [wh] + noun_phrase + rest
    copula = "are" if plural else "is"
    return prefix + [wh, copula, "the"] + noun_phrase + rest


def generate_nq_like(question, annotations, clusters, options=None, vocab=None, diagnostics=None):
    """Run the full per-question pipeline and return generated questions in order."""
    options = options or GenerationOptions()
    vocab = vocab or load_default_vocabulary()
    diagnostics = diagnostics if diagnostics is not None else Diagnostics()
    last_index = max(ann.sentence_index for ann in annotations) if annotations else 0
    generated = []
    for ann in annotations:
        is_last = ann.sentence_index == last_index
        if options.last_sentence_only and not is_last:
            continue
        splits = split_clauses(ann)
        splits = resolve_pronouns(splits, clusters)
        splits = merge_short_splits(splits, options.min_words)
        for split in splits:
            try:
                tokens = _clean_tokens([token.surface for token in split.tokens])
            except PipelineError:
                diagnostics.warn(
                    "generate", question.id,
                    f"sentence {ann.sentence_index} split {split.split_index} cleaned to empty",
                )
                continue
            text = " ".join(tokens)
            text = rewrite_last(text, vocab) if is_last else rewrite_nonlast(text)
            generated.append(
                GeneratedQuestion(
                    text=text,
                    source_question_id=question.id,
                    sentence_index=ann.sentence_index,
                    split_index=split.split_index,
                    is_last_sentence=is_last,
                    answer=question.answer,
                    split=question.split.value,
                )
            )
    if not generated:
        diagnostics.warn("generate", question.id, "question produced no output")
    return generated


def rule_fingerprint():
    """Stable digest input describing the frozen rewrite tables."""
    parts = [
        "disallowed_final=" + ",".join(sorted(_DISALLOWED_FINAL)),
        "nonlast=" + ",".join(f"{k}>{v}" for k, v in sorted(_NONLAST_TABLE.items())),
        "numbers=" + ",".join(sorted(_NUMBER_WORDS)),
        "quickness=" + ",".join(sorted(_QUICKNESS_WORDS)),
        "naming=" + ",".join(sorted(_NAMING_VERBS)),
        "np_stoppers=" + ",".join(sorted(_NP_STOPPERS)),
    ]
    return ";".join(parts)
