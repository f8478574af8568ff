"""Rule engine tests: clause splits, pronoun substitution, merging, rewriting."""

import functools
import random
import re

import pytest

from conftest import fixture_path

from quizmorph.annotation import (
    CorefCluster,
    Mention,
    SentenceAnnotation,
    Token,
    parse_annotations,
)
from quizmorph.common import Diagnostics, PipelineError
from quizmorph.ingest import Source, load_dataset
from quizmorph.transform import (
    BoundaryCause,
    ClauseSplit,
    GenerationOptions,
    WhVocabulary,
    clean_split,
    generate_nq_like,
    load_default_vocabulary,
    merge_short_splits,
    resolve_pronouns,
    rewrite_last,
    rewrite_nonlast,
    split_clauses,
    wh_class_for_noun,
)


def sentence(*rows, index=0):
    tokens = [
        Token(i, surface, upos, head, deprel)
        for i, (surface, upos, head, deprel) in enumerate(rows)
    ]
    return SentenceAnnotation(index, tokens)


def surfaces(split):
    return [token.surface for token in split.tokens]


class TestWhVocabulary:
    def test_known_classes(self):
        vocab = load_default_vocabulary()
        assert wh_class_for_noun("author", vocab) == "who"
        assert wh_class_for_noun("event", vocab) == "which"
        assert wh_class_for_noun("zxqv", vocab) == "what"

    def test_plural_lookup(self):
        vocab = WhVocabulary({"river": "which", "city": "which", "hero": "who"})
        assert vocab.lookup("rivers") == ("which", True)
        assert vocab.lookup("cities") == ("which", True)
        assert vocab.lookup("heroes") == ("who", True)
        assert vocab.lookup("river") == ("which", False)

    def test_miss_defaults_to_what(self):
        vocab = WhVocabulary({})
        assert vocab.lookup("anything") == ("what", False)

    def test_load_rejects_bad_line(self, tmp_path):
        path = tmp_path / "vocab.tsv"
        path.write_text("author\twho\nriver\tmaybe\n", encoding="utf-8")
        with pytest.raises(PipelineError):
            WhVocabulary.load(str(path))

    def test_load_skips_comments_and_blanks(self, tmp_path):
        path = tmp_path / "vocab.tsv"
        path.write_text("# header\n\nauthor\twho\n", encoding="utf-8")
        assert WhVocabulary.load(str(path)).entries == {"author": "who"}

    def test_empty_head_raises(self):
        with pytest.raises(PipelineError):
            wh_class_for_noun("", WhVocabulary({}))


class TestSplitClauses:
    def test_no_boundaries_single_whole_split(self):
        ann = sentence(
            ("She", "PRON", 1, "nsubj"),
            ("sings", "VERB", -1, "root"),
            ("well", "ADV", 1, "advmod"),
        )
        splits = split_clauses(ann)
        assert len(splits) == 1
        assert splits[0].boundary_cause is BoundaryCause.WHOLE
        assert surfaces(splits[0]) == ["She", "sings", "well"]

    def test_verbal_conjunct_drops_conjunction(self):
        ann = sentence(
            ("X", "NOUN", 1, "nsubj"),
            ("includes", "VERB", -1, "root"),
            ("Snyder", "PROPN", 1, "obj"),
            ("and", "CCONJ", 5, "cc"),
            ("it", "PRON", 5, "nsubj"),
            ("borders", "VERB", 1, "conj"),
            ("Ohio", "PROPN", 5, "obj"),
        )
        splits = split_clauses(ann)
        assert [surfaces(s) for s in splits] == [
            ["X", "includes", "Snyder"],
            ["it", "borders", "Ohio"],
        ]
        assert [s.boundary_cause for s in splits] == [
            BoundaryCause.WHOLE,
            BoundaryCause.CONJ_CC,
        ]

    def test_nominal_conjunct_does_not_split(self):
        ann = sentence(
            ("X", "NOUN", 1, "nsubj"),
            ("includes", "VERB", -1, "root"),
            ("Snyder", "PROPN", 1, "obj"),
            ("and", "CCONJ", 4, "cc"),
            ("Wyoming", "PROPN", 2, "conj"),
        )
        splits = split_clauses(ann)
        assert len(splits) == 1
        assert surfaces(splits[0]) == ["X", "includes", "Snyder", "and", "Wyoming"]

    def test_adverbial_clause_boundary(self):
        ann = sentence(
            ("she", "PRON", 1, "nsubj"),
            ("left", "VERB", -1, "root"),
            ("because", "SCONJ", 4, "mark"),
            ("rain", "NOUN", 4, "nsubj"),
            ("fell", "VERB", 1, "advcl"),
        )
        splits = split_clauses(ann)
        assert [surfaces(s) for s in splits] == [
            ["she", "left"],
            ["because", "rain", "fell"],
        ]
        assert splits[1].boundary_cause is BoundaryCause.ADVCL

    def test_sentence_initial_adverbial_clause_not_a_boundary(self):
        ann = sentence(
            ("Because", "SCONJ", 2, "mark"),
            ("rain", "NOUN", 2, "nsubj"),
            ("fell", "VERB", 4, "advcl"),
            ("she", "PRON", 4, "nsubj"),
            ("left", "VERB", -1, "root"),
        )
        splits = split_clauses(ann)
        assert len(splits) == 1

    def test_conjunction_outside_subtree_also_consumed(self):
        ann = sentence(
            ("X", "NOUN", 1, "nsubj"),
            ("runs", "VERB", -1, "root"),
            ("fast", "ADV", 1, "advmod"),
            ("and", "CCONJ", 1, "cc"),
            ("Y", "NOUN", 5, "nsubj"),
            ("jumps", "VERB", 1, "conj"),
            ("high", "ADV", 5, "advmod"),
        )
        splits = split_clauses(ann)
        assert [surfaces(s) for s in splits] == [
            ["X", "runs", "fast"],
            ["Y", "jumps", "high"],
        ]

    def test_splits_cover_tokens_in_order(self):
        annotations = parse_annotations_fixture()
        for annotation in annotations.values():
            for ann in annotation.sentences:
                splits = split_clauses(ann)
                indices = [t.index for s in splits for t in s.tokens]
                assert indices == sorted(indices)
                missing = set(range(len(ann.tokens))) - set(indices)
                for index in missing:
                    assert ann.tokens[index].deprel == "cc"
                assert [s.split_index for s in splits] == list(range(len(splits)))


@functools.lru_cache(maxsize=None)
def parse_annotations_fixture():
    return parse_annotations(fixture_path("annotations_fixture.txt"))


@functools.lru_cache(maxsize=None)
def fixture_corpus():
    questions = {
        record.id: record
        for record in load_dataset(fixture_path("qb_fixture.jsonl"), Source.TRIVIA_QB)
    }
    return questions, parse_annotations_fixture()


def make_cluster(rep_tokens, rep_mention, other_mentions):
    return CorefCluster(
        cluster_id=0,
        mentions=[rep_mention] + other_mentions,
        representative=rep_mention,
        representative_tokens=rep_tokens,
    )


class TestResolvePronouns:
    def test_possessive_gets_apostrophe_s(self):
        split = ClauseSplit(
            [
                Token(0, "its", "PRON", 1, "nmod:poss"),
                Token(1, "rivers", "NOUN", 2, "nsubj"),
                Token(2, "flow", "VERB", -1, "root"),
                Token(3, "north", "ADV", 2, "advmod"),
            ],
            sentence_index=1,
            split_index=0,
            boundary_cause=BoundaryCause.WHOLE,
        )
        cluster = make_cluster(
            ["this", "country"], Mention(0, 0, 2), [Mention(1, 0, 1)]
        )
        resolved = resolve_pronouns([split], [cluster])
        assert surfaces(resolved[0]) == [
            "this", "country", "'s", "rivers", "flow", "north",
        ]

    def test_plain_pronoun_replaced_without_possessive(self):
        split = ClauseSplit(
            [
                Token(0, "it", "PRON", 1, "nsubj"),
                Token(1, "borders", "VERB", -1, "root"),
                Token(2, "Ohio", "PROPN", 1, "obj"),
            ],
            sentence_index=1,
            split_index=0,
            boundary_cause=BoundaryCause.WHOLE,
        )
        cluster = make_cluster(["this", "state"], Mention(0, 2, 4), [Mention(1, 0, 1)])
        resolved = resolve_pronouns([split], [cluster])
        assert surfaces(resolved[0]) == ["this", "state", "borders", "Ohio"]

    def test_representative_in_same_split_blocks_substitution(self):
        split = ClauseSplit(
            [
                Token(0, "this", "DET", 1, "det"),
                Token(1, "state", "NOUN", 2, "nsubj"),
                Token(2, "loves", "VERB", -1, "root"),
                Token(3, "its", "PRON", 4, "nmod:poss"),
                Token(4, "rivers", "NOUN", 2, "obj"),
            ],
            sentence_index=0,
            split_index=0,
            boundary_cause=BoundaryCause.WHOLE,
        )
        cluster = make_cluster(["this", "state"], Mention(0, 0, 2), [Mention(0, 3, 4)])
        resolved = resolve_pronouns([split], [cluster])
        assert surfaces(resolved[0]) == surfaces(split)

    def test_unclustered_pronoun_untouched(self):
        split = ClauseSplit(
            [Token(0, "it", "PRON", 1, "nsubj"), Token(1, "rains", "VERB", -1, "root")],
            sentence_index=0,
            split_index=0,
            boundary_cause=BoundaryCause.WHOLE,
        )
        assert surfaces(resolve_pronouns([split], [])[0]) == ["it", "rains"]

    def test_multi_token_mention_not_substituted(self):
        split = ClauseSplit(
            [
                Token(0, "they", "PRON", 2, "nsubj"),
                Token(1, "all", "DET", 0, "det"),
                Token(2, "sing", "VERB", -1, "root"),
            ],
            sentence_index=1,
            split_index=0,
            boundary_cause=BoundaryCause.WHOLE,
        )
        cluster = make_cluster(["the", "birds"], Mention(0, 0, 2), [Mention(1, 0, 2)])
        assert surfaces(resolve_pronouns([split], [cluster])[0]) == surfaces(split)


def counted_split(words, split_index, cause=BoundaryCause.WHOLE):
    tokens = [
        Token(i, f"w{split_index}_{i}", "NOUN", -1 if i == 0 else 0, "dep")
        for i in range(words)
    ]
    return ClauseSplit(tokens, 0, split_index, cause)


def word_count_profile(splits):
    return [len(split.tokens) for split in splits]


def merge_counts_oracle(counts, min_words=8):
    merged = list(counts)
    while len(merged) > 1:
        short = next((i for i, c in enumerate(merged) if c < min_words), None)
        if short is None:
            break
        left = max(short - 1, 0)
        merged[left : left + 2] = [merged[left] + merged[left + 1]]
    return merged


class TestMergeShortSplits:
    def test_trailing_short_merges_left(self):
        merged = merge_short_splits([counted_split(10, 0), counted_split(3, 1)])
        assert word_count_profile(merged) == [13]

    def test_single_short_split_unchanged(self):
        merged = merge_short_splits([counted_split(5, 0)])
        assert word_count_profile(merged) == [5]

    def test_middle_short_merges_left(self):
        splits = [counted_split(9, 0), counted_split(7, 1), counted_split(12, 2)]
        assert word_count_profile(merge_short_splits(splits)) == [16, 12]

    def test_leading_short_merges_right(self):
        merged = merge_short_splits([counted_split(3, 0), counted_split(10, 1)])
        assert word_count_profile(merged) == [13]

    def test_token_order_and_reindex(self):
        splits = [
            counted_split(9, 0),
            counted_split(2, 1, BoundaryCause.ADVCL),
            counted_split(8, 2, BoundaryCause.CONJ_CC),
        ]
        merged = merge_short_splits(splits)
        assert [s.split_index for s in merged] == [0, 1]
        assert merged[0].boundary_cause is BoundaryCause.WHOLE
        assert surfaces(merged[0]) == surfaces(splits[0]) + surfaces(splits[1])

    def test_punctuation_not_counted_as_word(self):
        wordy = counted_split(8, 0)
        punctuated = ClauseSplit(
            [Token(i, ",", "PUNCT", 0, "punct") for i in range(9)],
            0, 1, BoundaryCause.ADVCL,
        )
        merged = merge_short_splits([wordy, punctuated])
        assert len(merged) == 1

    def test_matches_count_oracle_exhaustively_short(self):
        for length in (1, 2, 3):
            for counts in all_count_tuples(length):
                check_merge_against_oracle(counts)

    def test_matches_count_oracle_sampled_long(self):
        rng = random.Random(20260815)
        for _ in range(2000):
            length = rng.randint(4, 6)
            counts = [rng.randint(1, 15) for _ in range(length)]
            check_merge_against_oracle(counts)

    def test_post_condition_all_splits_reach_floor(self):
        rng = random.Random(7)
        for _ in range(500):
            counts = [rng.randint(1, 15) for _ in range(rng.randint(1, 6))]
            merged = merge_short_splits([counted_split(c, i) for i, c in enumerate(counts)])
            if len(merged) > 1:
                assert all(len(s.tokens) >= 8 for s in merged)


def all_count_tuples(length, ceiling=15):
    if length == 0:
        yield ()
        return
    for rest in all_count_tuples(length - 1, ceiling):
        for count in range(1, ceiling + 1):
            yield rest + (count,)


def check_merge_against_oracle(counts):
    splits = [counted_split(c, i) for i, c in enumerate(counts)]
    merged = merge_short_splits(splits)
    assert word_count_profile(merged) == merge_counts_oracle(counts), counts
    flat = [t.surface for s in merged for t in s.tokens]
    assert flat == [t.surface for s in splits for t in s.tokens]


class TestCleanSplit:
    def test_strips_comma_and_conjunction(self):
        assert clean_split("ends in this state , and") == "ends in this state"

    def test_preserves_question_mark(self):
        assert clean_split("who is the author ?") == "who is the author ?"

    def test_strips_every_disallowed_final_word(self):
        for word in (
            "and", "but", "or", "nor", "so", "yet", "for", "because",
            "although", "though", "while", "whereas", "which", "that",
            "with", "of", "to", "in", "on", "at", "by",
        ):
            assert clean_split(f"keep these words {word}") == "keep these words"

    def test_strips_repeatedly(self):
        assert clean_split("keep these words , and of .") == "keep these words"

    def test_case_insensitive(self):
        assert clean_split("keep these words And") == "keep these words"

    def test_degenerate_raises(self):
        with pytest.raises(PipelineError):
            clean_split(", and of .")


class TestRewriteNonlast:
    def test_this_becomes_which(self):
        assert rewrite_nonlast("this country borders Chad") == "which country borders Chad"

    def test_it_becomes_what(self):
        assert rewrite_nonlast("it was signed in 1848") == "what was signed in 1848"

    def test_no_substitutable_word_identity(self):
        assert rewrite_nonlast("the river flows north") == "the river flows north"

    def test_capitalization_preserved(self):
        assert rewrite_nonlast("This city fell") == "Which city fell"
        assert rewrite_nonlast("Its walls stand") == "Whose walls stand"

    def test_these_becomes_which(self):
        assert rewrite_nonlast("these poets wrote odes") == "which poets wrote odes"


class TestRewriteLast:
    @pytest.fixture()
    def vocab(self):
        return load_default_vocabulary()

    def test_author_golden(self, vocab):
        assert rewrite_last("For 10 points , name this author", vocab) == "who is the author ?"

    def test_event_golden(self, vocab):
        assert (
            rewrite_last("For 10 points , name this 1985 event", vocab)
            == "which is the 1985 event ?"
        )

    def test_phenomenon_golden(self, vocab):
        assert (
            rewrite_last("For 10 points , name this phenomenon", vocab)
            == "what is the phenomenon ?"
        )

    def test_ftp_abbreviation(self, vocab):
        assert rewrite_last("FTP , name this author", vocab) == "who is the author ?"

    def test_spelled_number_and_identify(self, vocab):
        assert (
            rewrite_last("For ten points , identify this element", vocab)
            == "what is the element ?"
        )

    def test_quickness_adverb_skipped(self, vocab):
        assert (
            rewrite_last("For 10 points , quickly name this poet", vocab)
            == "who is the poet ?"
        )

    def test_plural_demonstrative(self, vocab):
        assert (
            rewrite_last("For 10 points , name these rivers", vocab)
            == "which are the rivers ?"
        )

    def test_prefix_before_template_kept(self, vocab):
        assert (
            rewrite_last("He wrote plays , for 10 points , name this playwright", vocab)
            == "He wrote plays , who is the playwright ?"
        )

    def test_relative_clause_attaches_after_wh(self, vocab):
        assert (
            rewrite_last("For 10 points , name this author who wrote Hamlet", vocab)
            == "who author wrote Hamlet ?"
        )

    def test_no_template_falls_back_to_word_table(self, vocab):
        assert (
            rewrite_last("this state borders Ohio", vocab)
            == "which state borders Ohio ?"
        )

    def test_fallback_still_strips_points_phrase(self, vocab):
        assert (
            rewrite_last("For 10 points , its capital is Canberra", vocab)
            == "whose capital is Canberra ?"
        )

    def test_no_points_residue(self, vocab):
        cases = [
            "For 10 points , name this author",
            "For twenty-five points , identify this treaty",
            "FTP name this composer of nine symphonies",
            "He ruled early , for 10 points , name this king",
        ]
        for case in cases:
            output = rewrite_last(case, vocab)
            assert not re.search(r"for\s+\S+\s+points", output, re.IGNORECASE)
            assert output.endswith("?")


class TestGenerateNqLike:
    @pytest.fixture()
    def corpus(self):
        return fixture_corpus()

    def generate(self, corpus, question_id, options=None):
        questions, annotations = corpus
        annotation = annotations[question_id]
        return generate_nq_like(
            questions[question_id], annotation.sentences, annotation.clusters, options
        )

    def test_pennsylvania_trace(self, corpus):
        texts = [g.text for g in self.generate(corpus, "q001")]
        assert texts == [
            "Chris Carney represents which state 's 10th district in congress , "
            "which includes Snyder and Wyoming counties",
            "What includes Raystown Lake ; the Monongahela ends in which state , "
            "where what meets the Allegheny river",
            "which state 's capital was moved to Harrisburg from Lancaster in 1812",
            "With capital at Harrisburg , what northeastern state has Philadelphia "
            "as its metropolis , and is named after its Quaker founder ?",
        ]

    def test_composer_outputs(self, corpus):
        texts = [g.text for g in self.generate(corpus, "q002")]
        assert texts == [
            "Which composer wrote the heroic Eroica symphony in three years",
            "Which composer premiered a grand ninth choral symphony in Vienna",
            "who is the composer of nine symphonies ?",
        ]

    def test_river_outputs(self, corpus):
        texts = [g.text for g in self.generate(corpus, "q005")]
        assert texts == [
            "Which river begins at Lake Itasca in Minnesota",
            "Barges carry heavy grain along which waterway every single year",
            "while whose wide delta spreads across southern Louisiana",
            "which river flows to the Gulf of Mexico ?",
        ]

    def test_single_sentence_one_output(self, corpus):
        generated = self.generate(corpus, "q020")
        assert len(generated) == 1
        assert generated[0].is_last_sentence
        assert generated[0].sentence_index == 0

    def test_last_sentence_only(self, corpus):
        everything = self.generate(corpus, "q001")
        final_only = self.generate(corpus, "q001", GenerationOptions(last_sentence_only=True))
        assert all(g.is_last_sentence for g in final_only)
        assert [g.text for g in final_only] == [
            g.text for g in everything if g.is_last_sentence
        ]

    def test_corpus_invariants(self, corpus):
        questions, annotations = corpus
        disallowed = {
            "and", "but", "or", "nor", "so", "yet", "for", "because", "although",
            "though", "while", "whereas", "which", "that", "with", "of", "to",
            "in", "on", "at", "by",
        }
        for question_id, annotation in annotations.items():
            question = questions[question_id]
            generated = generate_nq_like(question, annotation.sentences, annotation.clusters)
            positions = [(g.sentence_index, g.split_index) for g in generated]
            assert positions == sorted(positions)
            for item in generated:
                assert item.text
                final = item.text.split()[-1]
                assert final == "?" or any(ch.isalnum() for ch in final)
                assert final.lower() not in disallowed
                assert item.answer == question.answer
                assert item.source_question_id == question_id
                assert item.id == f"{question_id}-s{item.sentence_index}-c{item.split_index}"
                if item.is_last_sentence:
                    assert not re.search(r"for\s+\S+\s+points", item.text, re.IGNORECASE)

    def test_deterministic(self, corpus):
        first = [g.text for g in self.generate(corpus, "q001")]
        second = [g.text for g in self.generate(corpus, "q001")]
        assert first == second

    def test_degenerate_question_warns(self, corpus):
        questions, _ = corpus
        ann = SentenceAnnotation(0, [Token(0, "and", "CCONJ", -1, "root")])
        diags = Diagnostics()
        generated = generate_nq_like(questions["q020"], [ann], [], diagnostics=diags)
        assert generated == []
        assert len(diags) == 2
