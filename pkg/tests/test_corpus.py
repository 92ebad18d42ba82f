import json

import pytest

from dialsum.corpus import (
    ANNOTATED,
    RAW_CHAT,
    Corpus,
    Dialogue,
    Speaker,
    Utterance,
    compute_stats,
    load_corpus,
    save_corpus,
    utterance_density,
)
from dialsum.data import load_toy_corpus
from dialsum.errors import DataError, EmptyCorpusError


def make_dialogue(did="x", n_turns=3, n_speakers=2, summary="a b c d e"):
    speakers = [Speaker(i, f"spk{i}") for i in range(n_speakers)]
    turns = [
        Utterance(speaker_id=i % n_speakers, raw_text=f"hello world {i}")
        for i in range(n_turns)
    ]
    return Dialogue(id=did, speakers=speakers, turns=turns, summary_text=summary)


def write_raw(tmp_path, records, name="train.json"):
    path = tmp_path / name
    path.write_text(json.dumps(records), encoding="utf-8")
    return path


class TestLoadRawChat:
    def test_first_colon_space_splits_speaker(self, tmp_path):
        path = write_raw(
            tmp_path,
            [{"id": "a", "dialogue": "gabriel: no problem, shall we", "summary": "s"}],
        )
        corpus = load_corpus(path, format=RAW_CHAT)
        turn = corpus.dialogues[0].turns[0]
        assert corpus.dialogues[0].speaker_name(turn.speaker_id) == "gabriel"
        assert turn.raw_text == "no problem, shall we"

    def test_continuation_line_attaches_to_previous(self, tmp_path):
        path = write_raw(
            tmp_path,
            [{"id": "a", "dialogue": "mia: trailer here\nhttp://x.io/t\nnoah: ok", "summary": "s"}],
        )
        d = load_corpus(path, format=RAW_CHAT).dialogues[0]
        assert len(d.turns) == 2
        assert d.turns[0].raw_text == "trailer here\nhttp://x.io/t"

    def test_empty_file_is_empty_corpus_error(self, tmp_path):
        path = write_raw(tmp_path, [])
        with pytest.raises(EmptyCorpusError):
            load_corpus(path, format=RAW_CHAT)

    def test_malformed_record_names_index_and_field(self, tmp_path):
        path = write_raw(tmp_path, [{"id": "a", "summary": "s"}])
        with pytest.raises(DataError, match="record 0.*dialogue"):
            load_corpus(path, format=RAW_CHAT)

    def test_leading_continuation_is_malformed(self, tmp_path):
        path = write_raw(tmp_path, [{"id": "a", "dialogue": "no speaker here", "summary": "s"}])
        with pytest.raises(DataError, match="record 0"):
            load_corpus(path, format=RAW_CHAT)

    def test_duplicate_ids_rejected(self, tmp_path):
        rec = {"id": "a", "dialogue": "x: hi", "summary": "s"}
        path = write_raw(tmp_path, [rec, rec])
        with pytest.raises(DataError, match="duplicate"):
            load_corpus(path, format=RAW_CHAT)

    def test_toy_corpus_shape(self):
        # Hand-counted from the bundled fixture files.
        corpora = {s: load_toy_corpus(s) for s in ("train", "dev", "test")}
        assert [len(corpora[s]) for s in ("train", "dev", "test")] == [8, 2, 2]
        assert sum(len(c) for c in corpora.values()) == 12
        train = corpora["train"]
        assert [d.n_speakers for d in train] == [2, 2, 2, 2, 2, 2, 2, 3]
        assert [len(d.turns) for d in train] == [4, 6, 4, 4, 4, 3, 3, 4]


class TestRoundTrip:
    def test_raw_chat_round_trip_identity(self, tmp_path, toy_raw):
        first = toy_raw["train"]
        p1 = tmp_path / "a.json"
        save_corpus(first, p1, format=RAW_CHAT)
        second = load_corpus(p1, format=RAW_CHAT, split="train")
        p2 = tmp_path / "b.json"
        save_corpus(second, p2, format=RAW_CHAT)
        third = load_corpus(p2, format=RAW_CHAT, split="train")
        assert second == third
        assert second == first

    def test_annotated_round_trip_identity(self, tmp_path, toy_tagged):
        first = toy_tagged["train"]
        p1 = tmp_path / "a.jsonl"
        save_corpus(first, p1, format=ANNOTATED)
        second = load_corpus(p1, format=ANNOTATED, split="train")
        p2 = tmp_path / "b.jsonl"
        save_corpus(second, p2, format=ANNOTATED)
        third = load_corpus(p2, format=ANNOTATED, split="train")
        assert second == third
        for d1, d2 in zip(first, second):
            for t1, t2 in zip(d1.turns, d2.turns):
                assert t1.tokens == t2.tokens
                assert t1.pos_tags == t2.pos_tags


class TestComputeStats:
    def test_single_dialogue_degenerate_ranges(self):
        corpus = Corpus(split="train", dialogues=[make_dialogue(summary="a b c d e")])
        stats = compute_stats(corpus)
        assert stats.n_conversations == 1
        assert (stats.summary_length.mean, stats.summary_length.min, stats.summary_length.max) == (5, 5, 5)
        assert (stats.speakers.mean, stats.speakers.min, stats.speakers.max) == (2, 2, 2)
        assert (stats.turns.mean, stats.turns.min, stats.turns.max) == (3, 3, 3)

    def test_toy_stats_match_hand_recount(self, toy_raw):
        # Frozen from an independent recount over the raw JSON fixtures.
        expected = {
            "train": (8, 8.5, 6, 10, 2.125, 2, 3, 4.0, 3, 6),
            "dev": (2, 8.5, 8, 9, 2.0, 2, 2, 3.0, 3, 3),
            "test": (2, 7.5, 7, 8, 2.0, 2, 2, 3.5, 3, 4),
        }
        for split, exp in expected.items():
            s = compute_stats(toy_raw[split])
            got = (
                s.n_conversations,
                s.summary_length.mean, s.summary_length.min, s.summary_length.max,
                s.speakers.mean, s.speakers.min, s.speakers.max,
                s.turns.mean, s.turns.min, s.turns.max,
            )
            assert got == exp, split

    def test_empty_corpus_rejected(self):
        with pytest.raises(EmptyCorpusError):
            compute_stats(Corpus(split="train", dialogues=[]))

    def test_means_within_ranges_randomized(self):
        import random

        rng = random.Random(5)
        for _ in range(25):
            dialogues = [
                make_dialogue(
                    did=f"d{i}",
                    n_turns=rng.randint(1, 9),
                    n_speakers=rng.randint(1, 4),
                    summary=" ".join(["w"] * rng.randint(2, 30)),
                )
                for i in range(rng.randint(1, 12))
            ]
            s = compute_stats(Corpus(split="train", dialogues=dialogues))
            for triple in (s.summary_length, s.speakers, s.turns):
                assert triple.min <= triple.mean <= triple.max


class TestUtteranceDensity:
    def test_direct_count(self):
        dialogues = [
            make_dialogue("a", n_turns=3),
            make_dialogue("b", n_turns=3),
            make_dialogue("c", n_turns=11),
        ]
        corpus = Corpus(split="train", dialogues=dialogues)
        assert utterance_density(corpus, 10) == {0: 2, 10: 1}

    def test_toy_hand_counted_bins(self, toy_raw):
        assert utterance_density(toy_raw["train"], 5) == {0: 7, 5: 1}

    def test_empty_corpus_empty_histogram(self):
        assert utterance_density(Corpus(split="train", dialogues=[]), 3) == {}

    def test_zero_bin_width_rejected(self, toy_raw):
        with pytest.raises(ValueError):
            utterance_density(toy_raw["train"], 0)

    def test_total_equals_corpus_size_for_all_widths(self, toy_raw):
        for width in range(1, 12):
            for split in ("train", "dev", "test"):
                hist = utterance_density(toy_raw[split], width)
                assert sum(hist.values()) == len(toy_raw[split])


class TestDataModelInvariants:
    def test_unresolvable_speaker_rejected(self):
        with pytest.raises(ValueError, match="unknown speaker"):
            Dialogue(
                id="x",
                speakers=[Speaker(0, "a")],
                turns=[Utterance(speaker_id=9, raw_text="hi")],
                summary_text="s",
            )

    def test_zero_turn_dialogue_rejected(self):
        with pytest.raises(ValueError, match="no turns"):
            Dialogue(id="x", speakers=[], turns=[], summary_text="s")

    def test_tag_token_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            Utterance(speaker_id=0, raw_text="hi", tokens=["hi"], pos_tags=["N", "V"])
