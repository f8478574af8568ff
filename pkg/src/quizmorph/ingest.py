"""Dataset loading, answer normalization, and answer-keyed candidate pairing."""

import json
from dataclasses import dataclass
from enum import Enum

from .common import Diagnostics, PipelineError


class Source(Enum):
    TRIVIA_QB = "TriviaQB"
    NATURAL_NQ = "NaturalNQ"


class Split(Enum):
    TRAIN = "train"
    DEV = "dev"
    TEST = "test"
    UNSPLIT = "unsplit"


@dataclass(frozen=True)
class RawQuestion:
    id: str
    text: str
    answer: str
    source: Source
    split: Split = Split.UNSPLIT


@dataclass(frozen=True)
class CandidatePair:
    qb_id: str
    nq_id: str
    normalized_answer: str
    qb_text: str
    nq_text: str


_ARTICLES = ("a", "an", "the")

# Outer characters stripped from answers; periods stay so initials survive.
_ANSWER_STRIP = "\"'()[]{}“”‘’,;:!? "


def normalize_answer(text):
    """Canonicalize an answer: lowercase, collapse spaces, trim punctuation and articles."""
    value = " ".join(text.split()).lower().strip(_ANSWER_STRIP)
    words = value.split()
    while words and words[0] in _ARTICLES:
        words.pop(0)
    result = " ".join(words)
    if not result:
        raise PipelineError(f"answer normalizes to empty: {text!r}")
    return result


def load_dataset(path, source, diagnostics=None):
    """Load a JSON Lines dataset of {id, question, answer} records in file order."""
    diagnostics = diagnostics if diagnostics is not None else Diagnostics()
    try:
        handle = open(path, encoding="utf-8")
    except OSError as exc:
        raise PipelineError(f"cannot read dataset {path}: {exc}") from exc
    records = []
    seen = set()
    with handle:
        for number, raw in enumerate(handle, 1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                diagnostics.warn(path, number, f"invalid JSON: {exc.msg}")
                continue
            if not isinstance(obj, dict):
                diagnostics.warn(path, number, "record is not an object")
                continue
            if "meta" in obj and "id" not in obj:
                continue
            missing = [
                key
                for key in ("id", "question", "answer")
                if not str(obj.get(key, "")).strip()
            ]
            if missing:
                diagnostics.warn(path, number, f"missing field: {', '.join(missing)}")
                continue
            record_id = str(obj["id"])
            if record_id in seen:
                raise PipelineError(f"duplicate id {record_id} at {path}:{number}")
            seen.add(record_id)
            split_label = str(obj.get("split", "unsplit")).lower()
            try:
                split = Split(split_label)
            except ValueError:
                diagnostics.warn(path, number, f"unknown split {split_label!r}; treated as unsplit")
                split = Split.UNSPLIT
            records.append(
                RawQuestion(
                    id=record_id,
                    text=str(obj["question"]).strip(),
                    answer=str(obj["answer"]).strip(),
                    source=source,
                    split=split,
                )
            )
    return records


def pair_by_answer(qb, nq, diagnostics=None):
    """Cross product of records sharing a normalized answer, ordered deterministically."""
    diagnostics = diagnostics if diagnostics is not None else Diagnostics()

    def group(records, source_name):
        grouped = {}
        for record in records:
            try:
                key = normalize_answer(record.answer)
            except PipelineError:
                diagnostics.warn(source_name, record.id, f"unusable answer {record.answer!r}; record skipped")
                continue
            grouped.setdefault(key, []).append(record)
        return grouped

    qb_groups = group(qb, Source.TRIVIA_QB.value)
    nq_groups = group(nq, Source.NATURAL_NQ.value)
    pairs = []
    for answer in sorted(set(qb_groups) & set(nq_groups)):
        for qb_record in sorted(qb_groups[answer], key=lambda record: record.id):
            for nq_record in sorted(nq_groups[answer], key=lambda record: record.id):
                pairs.append(
                    CandidatePair(
                        qb_id=qb_record.id,
                        nq_id=nq_record.id,
                        normalized_answer=answer,
                        qb_text=qb_record.text,
                        nq_text=nq_record.text,
                    )
                )
    return pairs
