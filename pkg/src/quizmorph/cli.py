"""Command-line orchestration: pair, generate, filter, concat, stats, eval."""

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, fields

from . import __version__, quality, transform
from .annotation import heuristic_annotate, parse_annotations, split_sentences
from .common import Diagnostics, PipelineError
from .ingest import RawQuestion, Source, Split, load_dataset, pair_by_answer
from .metrics import EvalRecord, evaluate
from .pairing import LexicalProvider, provider_label, score_pairs
from .quality import HeuristicScorer, filter_wellformed
from .sidecar import ENDPOINT_ENV, SidecarClient
from .stats import sentence_count_stats, split_summary
from .transform import (
    GeneratedQuestion,
    GenerationOptions,
    WhVocabulary,
    generate_nq_like,
    load_default_vocabulary,
)

_BLEU_CONFIG = (
    "orders 1-4, exponential zero-count smoothing 1/(2^k*hyp_len), "
    "brevity penalty exp(1-ref/hyp), tokenizer lowercase + punctuation split"
)


@dataclass
class RunConfig:
    qb_path: str = None
    nq_path: str = None
    annotations_path: str = None
    vocab_path: str = None
    input_path: str = None
    inputs: list = None
    provider: str = "lexical"
    sidecar_endpoint: str = None
    pairing_threshold: float = 0.5
    quality_threshold: float = 0.5
    last_sentence_only: bool = False
    min_words: int = 8
    batch_size: int = 64
    seed: int = 0
    out_dir: str = "out"

    def validate(self):
        if not 0.0 <= self.pairing_threshold <= 1.0 and self.pairing_threshold != -1:
            raise PipelineError(f"pairing threshold {self.pairing_threshold} outside [0, 1]")
        if not 0.0 <= self.quality_threshold <= 1.0:
            raise PipelineError(f"quality threshold {self.quality_threshold} outside [0, 1]")
        if self.provider not in ("lexical", "sidecar"):
            raise PipelineError(f"unknown provider {self.provider!r}")
        if self.batch_size < 1:
            raise PipelineError(f"batch size {self.batch_size} must be positive")


def load_config(args):
    """Merge defaults, config file, and flags; flags win over the file."""
    config = RunConfig()
    known = {f.name for f in fields(RunConfig)}
    if getattr(args, "config", None):
        path = args.config
        if not os.path.exists(path):
            raise PipelineError(f"config file not found: {path}")
        with open(path, encoding="utf-8") as handle:
            try:
                loaded = json.load(handle)
            except json.JSONDecodeError as exc:
                raise PipelineError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise PipelineError(f"config file {path} must hold a JSON object")
        for key, value in loaded.items():
            if key not in known:
                raise PipelineError(f"unknown config key {key!r} in {path}")
            setattr(config, key, value)
    for name in known:
        value = getattr(args, name, None)
        if value is not None and value is not False:
            setattr(config, name, value)
    threshold = getattr(args, "threshold", None)
    if threshold is not None:
        if args.command == "filter":
            config.quality_threshold = threshold
        else:
            config.pairing_threshold = threshold
    environment = os.environ.get(ENDPOINT_ENV)
    if environment:
        config.sidecar_endpoint = environment
    config.validate()
    return config


def _config_hash(config):
    payload = {
        f.name: getattr(config, f.name) for f in fields(RunConfig) if f.name != "out_dir"
    }
    canonical = json.dumps(payload, sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def _rules_hash(config):
    digest = hashlib.sha256()
    digest.update(transform.rule_fingerprint().encode("utf-8"))
    digest.update(quality.rule_fingerprint().encode("utf-8"))
    vocab_path = config.vocab_path
    if vocab_path is None:
        from importlib import resources

        data = resources.files("quizmorph").joinpath("data/wh_vocab.tsv").read_bytes()
    else:
        with open(vocab_path, "rb") as handle:
            data = handle.read()
    digest.update(data)
    return digest.hexdigest()[:12]


def _meta(config):
    return {
        "tool": "quizmorph",
        "version": __version__,
        "config_hash": _config_hash(config),
        "rules_hash": _rules_hash(config),
    }


def _atomic_write(path, content):
    temp = path + ".tmp"
    with open(temp, "w", encoding="utf-8") as handle:
        handle.write(content)
    os.replace(temp, path)


def _write_jsonl(config, name, records):
    os.makedirs(config.out_dir, exist_ok=True)
    lines = [json.dumps({"meta": _meta(config)}, sort_keys=True)]
    lines.extend(json.dumps(record, sort_keys=True, ensure_ascii=False) for record in records)
    _atomic_write(os.path.join(config.out_dir, name), "\n".join(lines) + "\n")


def _write_json(config, name, payload):
    os.makedirs(config.out_dir, exist_ok=True)
    document = {"meta": _meta(config)}
    document.update(payload)
    _atomic_write(
        os.path.join(config.out_dir, name),
        json.dumps(document, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
    )


def _write_text(config, name, body):
    os.makedirs(config.out_dir, exist_ok=True)
    meta = _meta(config)
    header = (
        f"# {meta['tool']} {meta['version']} "
        f"config={meta['config_hash']} rules={meta['rules_hash']}\n"
    )
    _atomic_write(os.path.join(config.out_dir, name), header + body)


def _require(path, what):
    if not path:
        raise PipelineError(f"no {what} configured")
    if not os.path.exists(path):
        raise PipelineError(f"{what} not found: {path}")
    return path


def _similarity_provider(config):
    if config.provider == "sidecar":
        return SidecarClient(endpoint=config.sidecar_endpoint, batch_size=config.batch_size)
    return LexicalProvider()


def _quality_scorer(config):
    if config.provider == "sidecar":
        return SidecarClient(endpoint=config.sidecar_endpoint, batch_size=config.batch_size)
    return HeuristicScorer()


def _load_vocabulary(config):
    if config.vocab_path:
        return WhVocabulary.load(_require(config.vocab_path, "vocabulary file"))
    return load_default_vocabulary()


def cmd_pair(config, diagnostics):
    """Pair the two datasets by answer, score, and filter by similarity."""
    qb = load_dataset(_require(config.qb_path, "qb dataset"), Source.TRIVIA_QB, diagnostics)
    nq = load_dataset(_require(config.nq_path, "nq dataset"), Source.NATURAL_NQ, diagnostics)
    candidates = pair_by_answer(qb, nq, diagnostics)
    provider = _similarity_provider(config)
    try:
        scored = score_pairs(candidates, provider, config.batch_size, diagnostics)
    finally:
        closer = getattr(provider, "close", None)
        if closer is not None:
            closer()
    if config.pairing_threshold == -1:
        retained = scored
    else:
        retained = [pair for pair in scored if pair.similarity >= config.pairing_threshold]
    _write_jsonl(
        config,
        "pairs.jsonl",
        [
            {
                "qb_id": pair.qb_id,
                "nq_id": pair.nq_id,
                "answer": pair.normalized_answer,
                "similarity": pair.similarity,
                "provider": pair.provider,
            }
            for pair in retained
        ],
    )
    _write_json(
        config,
        "pair_summary.json",
        {
            "candidates": len(candidates),
            "retained": len(retained),
            "threshold": config.pairing_threshold,
            "provider": provider_label(provider),
        },
    )


def _annotations_for(question, parsed, diagnostics):
    if parsed is not None and question.id in parsed:
        block = parsed[question.id]
        return block.sentences, block.clusters
    sentences = split_sentences(question.text)
    annotations = [
        heuristic_annotate(sentence, index) for index, sentence in enumerate(sentences)
    ]
    return annotations, []


def cmd_generate(config, diagnostics):
    """Generate short questions from every input question."""
    qb = load_dataset(_require(config.qb_path, "qb dataset"), Source.TRIVIA_QB, diagnostics)
    parsed = None
    if config.annotations_path:
        parsed = parse_annotations(
            _require(config.annotations_path, "annotation file"), diagnostics
        )
    vocab = _load_vocabulary(config)
    options = GenerationOptions(
        last_sentence_only=config.last_sentence_only, min_words=config.min_words
    )
    generated = []
    for question in qb:
        annotations, clusters = _annotations_for(question, parsed, diagnostics)
        generated.extend(
            generate_nq_like(question, annotations, clusters, options, vocab, diagnostics)
        )
    _write_jsonl(config, "generated.jsonl", [_generated_record(q) for q in generated])
    if generated:
        summary = sentence_count_stats([q.text for q in generated])
        splits = split_summary(generated, diagnostics)
        _write_json(config, "generated_stats.json", _stats_payload(summary, splits))
        _write_text(config, "generated_stats.txt", _stats_table(summary, splits))


def _generated_record(question):
    return {
        "id": question.id,
        "source_id": question.source_question_id,
        "sentence_index": question.sentence_index,
        "split_index": question.split_index,
        "is_last_sentence": question.is_last_sentence,
        "question": question.text,
        "answer": question.answer,
        "split": question.split,
    }


def _read_jsonl(path, diagnostics, source_name):
    records = []
    with open(path, encoding="utf-8") as handle:
        for number, raw in enumerate(handle, 1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                diagnostics.warn(source_name, number, "invalid JSON, line skipped")
                continue
            if not isinstance(record, dict):
                diagnostics.warn(source_name, number, "not a JSON object, line skipped")
                continue
            if "meta" in record and len(record) == 1:
                continue
            records.append((number, record))
    return records


def _load_generated(path, diagnostics):
    source_name = os.path.basename(path)
    questions = []
    for number, record in _read_jsonl(path, diagnostics, source_name):
        try:
            question = GeneratedQuestion(
                text=record["question"],
                source_question_id=record["source_id"],
                sentence_index=int(record["sentence_index"]),
                split_index=int(record["split_index"]),
                is_last_sentence=bool(record["is_last_sentence"]),
                answer=record["answer"],
                split=record.get("split", Split.UNSPLIT.value),
            )
        except (KeyError, TypeError, ValueError) as exc:
            diagnostics.warn(source_name, number, f"bad generated record: {exc}")
            continue
        questions.append(question)
    return questions


def cmd_filter(config, diagnostics):
    """Score generated questions and keep those above the quality threshold."""
    path = _require(config.input_path, "generated question file")
    questions = _load_generated(path, diagnostics)
    scorer = _quality_scorer(config)
    try:
        retained = filter_wellformed(
            questions, scorer, config.quality_threshold, config.batch_size
        )
    finally:
        closer = getattr(scorer, "close", None)
        if closer is not None:
            closer()
    _write_jsonl(config, "filtered.jsonl", [_generated_record(q) for q in retained])
    _write_jsonl(
        config,
        "score_report.jsonl",
        [
            {
                "id": question.id,
                "question": question.text,
                "score": question.quality_score,
                "retained": question.quality_score > config.quality_threshold,
            }
            for question in questions
        ],
    )


def cmd_concat(config, diagnostics):
    """Merge datasets into one file, tagging records with their origin."""
    paths = config.inputs or []
    if not paths:
        raise PipelineError("no input files to concatenate")
    merged = []
    seen = {}
    for path in paths:
        _require(path, "input file")
        origin = os.path.splitext(os.path.basename(path))[0]
        for number, record in _read_jsonl(path, diagnostics, os.path.basename(path)):
            identity = record.get("id")
            question = record.get("question")
            answer = record.get("answer")
            if not identity or not question or answer is None:
                diagnostics.warn(
                    os.path.basename(path), number, "record missing id/question/answer"
                )
                continue
            if identity in seen:
                seen[identity] += 1
                fresh = f"{identity}-{seen[identity]}"
                diagnostics.warn(
                    os.path.basename(path), number,
                    f"duplicate id {identity}, renamed to {fresh}",
                )
                identity = fresh
            else:
                seen[identity] = 1
            merged.append(
                {
                    "id": identity,
                    "question": question,
                    "answer": answer,
                    "split": record.get("split", Split.UNSPLIT.value),
                    "origin": origin,
                }
            )
    _write_jsonl(config, "concat.jsonl", merged)


def _stats_payload(summary, splits):
    return {
        "sample_count": summary.sample_count,
        "mean": summary.mean,
        "median": summary.median,
        "mode": summary.mode,
        "splits": splits,
    }


def _stats_table(summary, splits):
    header = f"{'Data Size':>10}  {'Mean':>8}  {'Median':>8}  {'Mode':>8}\n"
    row = (
        f"{summary.sample_count:>10}  {summary.mean:>8.2f}  "
        f"{summary.median:>8.2f}  {summary.mode:>8.2f}\n"
    )
    split_row = (
        "Splits: "
        + " ".join(f"{name}={splits[name]}" for name in ("train", "dev", "test", "unsplit"))
        + "\n"
    )
    return header + row + split_row


def cmd_stats(config, diagnostics):
    """Summarize sentence counts and split membership of a dataset."""
    path = _require(config.input_path, "dataset file")
    source_name = os.path.basename(path)
    records = []
    for number, record in _read_jsonl(path, diagnostics, source_name):
        question = record.get("question")
        if not question:
            diagnostics.warn(source_name, number, "record missing question")
            continue
        records.append(
            RawQuestion(
                id=str(record.get("id", number)),
                text=question,
                answer=str(record.get("answer", "")),
                source=Source.TRIVIA_QB,
                split=_split_of(record, diagnostics, source_name, number),
            )
        )
    if not records:
        raise PipelineError(f"no usable records in {path}")
    summary = sentence_count_stats([record.text for record in records])
    splits = split_summary(records, diagnostics)
    _write_json(config, "stats.json", _stats_payload(summary, splits))
    _write_text(config, "stats.txt", _stats_table(summary, splits))


def _split_of(record, diagnostics, source_name, number):
    label = record.get("split", Split.UNSPLIT.value)
    try:
        return Split(label)
    except ValueError:
        diagnostics.warn(source_name, number, f"unknown split {label!r}, using unsplit")
        return Split.UNSPLIT


def cmd_eval(config, diagnostics):
    """Compute answer metrics for a file of predictions and references."""
    path = _require(config.input_path, "evaluation file")
    source_name = os.path.basename(path)
    records = []
    for number, record in _read_jsonl(path, diagnostics, source_name):
        prediction = record.get("prediction")
        references = record.get("references")
        if prediction is None or not isinstance(references, list) or not references:
            raise PipelineError(
                f"{source_name}:{number}: record needs prediction and nonempty references"
            )
        records.append(
            EvalRecord(
                id=str(record.get("id", number)),
                prediction=str(prediction),
                references=tuple(str(reference) for reference in references),
            )
        )
    report = evaluate(records)
    _write_json(config, "eval_report.json", {"bleu_config": _BLEU_CONFIG, **report})
    header = f"# BLEU config: {_BLEU_CONFIG}\n"
    table = (
        f"{'Samples':>8}  {'Accuracy':>9}  {'Precision':>9}  "
        f"{'Recall':>9}  {'F1':>9}  {'SacreBLEU':>9}\n"
        f"{report['sample_count']:>8}  {report['accuracy']:>9.4f}  "
        f"{report['precision']:>9.4f}  {report['recall']:>9.4f}  "
        f"{report['f1']:>9.4f}  {report['corpus_bleu']:>9.2f}\n"
    )
    _write_text(config, "eval_report.txt", header + table)


_COMMANDS = {
    "pair": cmd_pair,
    "generate": cmd_generate,
    "filter": cmd_filter,
    "concat": cmd_concat,
    "stats": cmd_stats,
    "eval": cmd_eval,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="quizmorph",
        description="Generate, pair, filter, and evaluate short questions from trivia data.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, handler in _COMMANDS.items():
        sub = subparsers.add_parser(name, help=handler.__doc__)
        sub.add_argument("--config", help="JSON config file")
        sub.add_argument("--out", dest="out_dir", help="output directory")
        sub.add_argument("--threshold", type=float, help="similarity or quality threshold")
        sub.add_argument(
            "--last-sentence-only", action="store_true", dest="last_sentence_only",
            help="generate only from final sentences",
        )
        sub.add_argument("--provider", choices=("lexical", "sidecar"), default=None)
        sub.add_argument("--sidecar-endpoint", dest="sidecar_endpoint", help="host:port")
        sub.add_argument("--batch-size", dest="batch_size", type=int, default=None)
        if name == "pair":
            sub.add_argument("--qb", dest="qb_path", help="trivia dataset path")
            sub.add_argument("--nq", dest="nq_path", help="short-question dataset path")
        elif name == "generate":
            sub.add_argument("--qb", dest="qb_path", help="trivia dataset path")
            sub.add_argument("--annotations", dest="annotations_path")
            sub.add_argument("--vocab", dest="vocab_path")
            sub.add_argument("--min-words", dest="min_words", type=int, default=None)
        elif name in ("filter", "stats", "eval"):
            sub.add_argument("input_path", nargs="?", default=None, metavar="input")
        elif name == "concat":
            sub.add_argument("inputs", nargs="*", default=None, metavar="input")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    diagnostics = Diagnostics()
    try:
        config = load_config(args)
        _COMMANDS[args.command](config, diagnostics)
    except PipelineError as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return 2
    return 1 if len(diagnostics) else 0


if __name__ == "__main__":
    sys.exit(main())
