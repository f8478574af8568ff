"""Sentence segmentation, tokenization, and per-sentence linguistic annotations.

Annotations (part-of-speech, dependency heads, coreference) normally arrive
from an external parser through a tab-separated interchange file; a crude
built-in annotator covers smoke tests and unannotated corpora.
"""

import re
from dataclasses import dataclass, field

from .common import Diagnostics, PipelineError

_OPENERS = "\"'([{“‘"
_CLOSERS = "\"')]}”’"
_TRAILERS = set(",;:!?") | set(_CLOSERS)

# Words that keep a trailing period attached when tokenizing.
_ABBREVIATIONS = {
    "mr", "mrs", "ms", "dr", "prof", "st", "jr", "sr", "etc", "vs",
    "inc", "ltd", "co", "capt", "gen", "col", "sgt", "rev", "gov",
    "fig", "vol", "approx",
}

_CLITIC_RE = re.compile(r"(?i)(n['’]t|['’](?:s|re|ve|ll|d|m))$")
_CLITICS = {"'s", "'re", "'ve", "'ll", "'d", "'m", "n't"}

_BOUNDARY_RE = re.compile(r"([.!?]+)([" + re.escape(_CLOSERS) + r"]*)(\s+)")


def _is_lone_clitic(word):
    return word.lower().replace("’", "'") in _CLITICS


def _keeps_period(core):
    """Whether `core` plus a trailing period stays one token."""
    if not core:
        return False
    if "." in core:
        return True
    if len(core) == 1 and core.isalpha():
        return True
    return core.lower() in _ABBREVIATIONS


def _split_word(word):
    if set(word) <= {"."}:
        return [word]
    lead = []
    while word and word[0] in _OPENERS and not _is_lone_clitic(word):
        lead.append(word[0])
        word = word[1:]
    trail = []
    while word and not set(word) <= {"."}:
        if word.endswith("...") :
            dots = re.search(r"\.+$", word)
            trail.append(dots.group())
            word = word[: dots.start()]
        elif word[-1] in _TRAILERS:
            trail.append(word[-1])
            word = word[:-1]
        elif word[-1] == "." and not _keeps_period(word[:-1]):
            trail.append(".")
            word = word[:-1]
        else:
            break
    core = []
    if word:
        clitic = _CLITIC_RE.search(word)
        if clitic and clitic.start() > 0:
            core = [word[: clitic.start()], clitic.group(1)]
        else:
            core = [word]
    return lead + core + list(reversed(trail))


def tokenize(text):
    """Split raw text into surface tokens, separating punctuation and clitics."""
    tokens = []
    for word in text.split():
        tokens.extend(_split_word(word))
    return tokens


def _suppresses_break(text, dot_position):
    start = dot_position
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    word = text[start:dot_position].lstrip(_OPENERS)
    if not word:
        return True
    if "." in word:
        return True
    if len(word) == 1 and word.isalpha() and word.islower():
        return True
    return word.lower() in _ABBREVIATIONS


def segment_sentences(text):
    """Cut raw text into sentence strings without altering any characters.

    A terminator run ends a sentence only when the following word starts with
    an uppercase letter or digit. A bare period after an unquoted lowercase
    letter or a known abbreviation does not end a sentence; a period inside a
    closing quote does, which is how quoted abbreviations terminate.
    """
    segments = []
    start = 0
    for match in _BOUNDARY_RE.finditer(text):
        terminator, closers, _ = match.groups()
        follow = match.end()
        while follow < len(text) and text[follow] in _OPENERS:
            follow += 1
        if follow >= len(text):
            continue
        if not (text[follow].isupper() or text[follow].isdigit()):
            continue
        if not closers and terminator == "." and _suppresses_break(text, match.start()):
            continue
        segments.append(text[start : match.start() + len(terminator) + len(closers)])
        start = match.end()
    tail = text[start:]
    if tail.strip():
        segments.append(tail)
    return [segment.strip() for segment in segments]


def split_sentences(text):
    """Segment text into sentences and return each as a space-joined token string."""
    sentences = []
    for segment in segment_sentences(text):
        tokens = tokenize(segment)
        if tokens:
            sentences.append(" ".join(tokens))
    return sentences


@dataclass(frozen=True)
class Token:
    index: int
    surface: str
    upos: str
    head: int
    deprel: str
    misc: str = "_"


@dataclass(frozen=True)
class Mention:
    sentence_index: int
    start: int
    end: int

    def covers(self, sentence_index, token_index):
        return (
            self.sentence_index == sentence_index
            and self.start <= token_index < self.end
        )


@dataclass
class CorefCluster:
    cluster_id: int
    mentions: list
    representative: Mention
    representative_tokens: list


@dataclass
class SentenceAnnotation:
    sentence_index: int
    tokens: list

    @property
    def text(self):
        return " ".join(token.surface for token in self.tokens)


@dataclass
class QuestionAnnotation:
    question_id: str
    sentences: list
    clusters: list


def _misc_entries(misc):
    if misc in ("", "_"):
        return []
    return [entry.partition("=")[::2] for entry in misc.split("|")]


def _validate_tokens(tokens):
    roots = 0
    for token in tokens:
        if token.head == -1:
            roots += 1
        elif not 0 <= token.head < len(tokens) or token.head == token.index:
            return f"token {token.index} has head {token.head} out of range"
    if roots != 1:
        return f"expected exactly one root, found {roots}"
    return None


def _build_clusters(sentences, diagnostics, source, question_id):
    memberships = {}
    for sentence in sentences:
        for token in sentence.tokens:
            for key, value in _misc_entries(token.misc):
                if key not in ("Coref", "CorefRep") or not value.lstrip("-").isdigit():
                    continue
                entry = memberships.setdefault(int(value), {})
                position = (sentence.sentence_index, token.index)
                entry[position] = entry.get(position, False) or key == "CorefRep"
    clusters = []
    for cluster_id in sorted(memberships):
        mentions, reps, texts = [], [], {}
        run = []

        def close_run():
            if not run:
                return
            sentence_index = run[0][0]
            mention = Mention(sentence_index, run[0][1], run[-1][1] + 1)
            mentions.append(mention)
            texts[mention] = sentences[sentence_index].tokens[mention.start : mention.end]
            if any(is_rep for _, _, is_rep in run):
                reps.append(mention)
            run.clear()

        for sentence_index, token_index in sorted(memberships[cluster_id]):
            is_rep = memberships[cluster_id][(sentence_index, token_index)]
            if run and (sentence_index != run[-1][0] or token_index != run[-1][1] + 1):
                close_run()
            run.append((sentence_index, token_index, is_rep))
        close_run()
        representative = _pick_representative(reps, mentions, texts)
        if representative is None:
            diagnostics.warn(
                source, question_id,
                f"cluster {cluster_id} has no non-pronoun mention; dropped",
            )
            continue
        clusters.append(
            CorefCluster(
                cluster_id=cluster_id,
                mentions=mentions,
                representative=representative,
                representative_tokens=[t.surface for t in texts[representative]],
            )
        )
    return clusters


def _pick_representative(reps, mentions, texts):
    def usable(mention):
        return any(token.upos != "PRON" for token in texts[mention])

    for mention in reps:
        if usable(mention):
            return mention
    candidates = [m for m in mentions if usable(m)]
    if not candidates:
        return None
    return min(candidates, key=lambda m: (m.sentence_index, m.start, -(m.end - m.start)))


def parse_annotations(path, diagnostics=None):
    """Read the interchange file into a map of question id -> QuestionAnnotation."""
    diagnostics = diagnostics if diagnostics is not None else Diagnostics()
    questions = {}
    current_id = None
    current_sentences = []
    current_tokens = []
    bad_question = False

    def close_sentence(line_number):
        nonlocal current_tokens, bad_question
        if not current_tokens:
            return
        indices = [token.index for token in current_tokens]
        if indices != list(range(len(current_tokens))):
            diagnostics.warn(path, line_number, "token indices not contiguous from 0; sentence skipped")
        else:
            problem = _validate_tokens(current_tokens)
            if problem:
                diagnostics.warn(path, line_number, f"{problem}; question {current_id} skipped")
                bad_question = True
            else:
                current_sentences.append(
                    SentenceAnnotation(len(current_sentences), current_tokens)
                )
        current_tokens = []

    def close_question(line_number):
        nonlocal current_sentences, bad_question
        close_sentence(line_number)
        if current_id is not None and not bad_question and current_sentences:
            clusters = _build_clusters(current_sentences, diagnostics, path, current_id)
            questions[current_id] = QuestionAnnotation(current_id, current_sentences, clusters)
        current_sentences = []

    try:
        handle = open(path, encoding="utf-8")
    except OSError as exc:
        raise PipelineError(f"cannot read annotations {path}: {exc}") from exc
    number = 0
    with handle:
        for number, raw in enumerate(handle, 1):
            line = raw.rstrip("\n")
            if line.startswith("# qid = "):
                close_question(number)
                current_id = line[len("# qid = ") :].strip()
                bad_question = False
                if current_id in questions:
                    diagnostics.warn(path, number, f"duplicate question id {current_id}; later block wins")
                continue
            if line.startswith("#"):
                continue
            if not line.strip():
                close_sentence(number)
                continue
            if current_id is None:
                diagnostics.warn(path, number, "token line before any question id; skipped")
                continue
            columns = line.split("\t")
            if len(columns) != 6:
                diagnostics.warn(path, number, f"expected 6 tab-separated columns, found {len(columns)}")
                continue
            try:
                index, head = int(columns[0]), int(columns[3])
            except ValueError:
                diagnostics.warn(path, number, "non-integer index or head")
                continue
            current_tokens.append(
                Token(index, columns[1], columns[2], head, columns[4], columns[5])
            )
        close_question(number)
    return questions


def serialize_annotations(questions):
    """Render QuestionAnnotation values back into the interchange format."""
    blocks = []
    for question_id, annotation in questions.items():
        lines = [f"# qid = {question_id}"]
        for position, sentence in enumerate(annotation.sentences):
            if position:
                lines.append("")
            for token in sentence.tokens:
                lines.append(
                    "\t".join(
                        [
                            str(token.index),
                            token.surface,
                            token.upos,
                            str(token.head),
                            token.deprel,
                            token.misc,
                        ]
                    )
                )
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


_PRONOUN_WORDS = {
    "it", "he", "she", "they", "them", "him", "its", "his", "their",
    "hers", "theirs", "i", "we", "you", "me", "us", "who", "whom",
}
_DETERMINER_WORDS = {
    "a", "an", "the", "this", "that", "these", "those", "every",
    "each", "some", "any", "no", "another",
}
_CCONJ_WORDS = {"and", "but", "or", "nor", "yet", "so"}
_ADPOSITION_WORDS = {
    "in", "on", "at", "by", "of", "to", "from", "with", "for", "about",
    "after", "before", "over", "under", "between", "during", "through",
    "against", "into", "upon", "near", "along", "across",
}


def _coarse_upos(surface):
    lower = surface.lower()
    if not any(ch.isalnum() for ch in surface):
        return "PUNCT"
    if lower in _PRONOUN_WORDS:
        return "PRON"
    if lower in _DETERMINER_WORDS:
        return "DET"
    if lower in _CCONJ_WORDS:
        return "CCONJ"
    if lower in _ADPOSITION_WORDS:
        return "ADP"
    if surface.replace(",", "").replace(".", "").isdigit():
        return "NUM"
    return "NOUN"


def heuristic_annotate(sentence, sentence_index=0):
    """Annotate one sentence with lexicon part-of-speech and a flat head structure."""
    if not sentence.strip():
        raise PipelineError("cannot annotate empty sentence")
    surfaces = tokenize(sentence)
    tokens = []
    previous_was_cconj = False
    for position, surface in enumerate(surfaces):
        upos = _coarse_upos(surface)
        if position == 0:
            head, deprel = -1, "root"
        elif upos == "PUNCT":
            head, deprel = 0, "punct"
        elif upos == "CCONJ":
            head, deprel = 0, "cc"
        elif previous_was_cconj:
            head, deprel = 0, "conj"
        else:
            head, deprel = 0, "dep"
        tokens.append(Token(position, surface, upos, head, deprel))
        previous_was_cconj = upos == "CCONJ"
    return SentenceAnnotation(sentence_index, tokens)
