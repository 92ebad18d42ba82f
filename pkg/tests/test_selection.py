import numpy as np
import pytest

from dialsum.corpus import Dialogue, Speaker, Utterance
from dialsum.selection import FULL, LEAD, LONGEST, MIDDLE, SelectionStrategy, build_input, select
from dialsum.tokenizer import IGNORE_ID, TAG_TO_ID, Vocabulary

from helpers import select_brute


def dialogue_with_lengths(lengths):
    speakers = [Speaker(0, "ann")]
    turns = [
        Utterance(speaker_id=0, raw_text=" ".join(["w"] * n), tokens=["w"] * n, pos_tags=["N"] * n)
        for n in lengths
    ]
    return Dialogue(id="dl", speakers=speakers, turns=turns, summary_text="s")


class TestStrategyValidation:
    def test_full_takes_no_n(self):
        with pytest.raises(ValueError):
            SelectionStrategy(FULL, 3)

    def test_n_must_be_positive(self):
        with pytest.raises(ValueError):
            SelectionStrategy(LEAD, 0)

    def test_parse_lowercase(self):
        assert SelectionStrategy.parse("longest", 10).kind == LONGEST
        assert SelectionStrategy.parse("full", 10).n is None


class TestSelect:
    def test_lead(self):
        d = dialogue_with_lengths([1, 1, 1, 1])
        assert select(d, SelectionStrategy(LEAD, 2)) == [0, 1]

    def test_middle_centered_block(self):
        # start = floor((5 - 2) / 2) = 1
        d = dialogue_with_lengths([1, 1, 1, 1, 1])
        assert select(d, SelectionStrategy(MIDDLE, 2)) == [1, 2]

    def test_longest_with_tie_toward_early_index(self):
        # Confirmed against brute force over all 2-subsets.
        d = dialogue_with_lengths([3, 9, 2, 9, 5])
        assert select(d, SelectionStrategy(LONGEST, 2)) == [1, 3]
        assert select_brute([3, 9, 2, 9, 5], LONGEST, 2) == [1, 3]

    def test_n_at_least_length_degrades_to_full(self):
        d = dialogue_with_lengths([1, 2, 3])
        for kind in (LEAD, MIDDLE, LONGEST):
            assert select(d, SelectionStrategy(kind, 7)) == [0, 1, 2]

    def test_size_is_min_n_length(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            lengths = list(rng.integers(1, 9, size=rng.integers(1, 9)))
            d = dialogue_with_lengths(lengths)
            n = int(rng.integers(1, 9))
            for kind in (LEAD, MIDDLE, LONGEST):
                got = select(d, SelectionStrategy(kind, n))
                assert len(got) == min(n, len(lengths))
                assert got == sorted(got)

    def test_lead_ignores_later_turn_contents(self):
        a = dialogue_with_lengths([2, 3, 4, 5])
        b = dialogue_with_lengths([2, 3, 9, 1])
        strat = SelectionStrategy(LEAD, 2)
        assert select(a, strat) == select(b, strat)

    def test_matches_brute_force_on_random_dialogues(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            lengths = [int(x) for x in rng.integers(1, 12, size=rng.integers(1, 10))]
            d = dialogue_with_lengths(lengths)
            n = int(rng.integers(1, 6))
            for kind in (LEAD, MIDDLE, LONGEST):
                assert select(d, SelectionStrategy(kind, n)) == select_brute(lengths, kind, n), (
                    lengths, kind, n,
                )


def small_vocab():
    return Vocabulary(["lilly", "sorry", "late", "ok", "ann", "bob", "hi", "yes"])


def tagged_dialogue():
    speakers = [Speaker(0, "lilly"), Speaker(1, "bob")]
    turns = [
        Utterance(0, "sorry", tokens=["sorry"], pos_tags=["!"]),
        Utterance(1, "ok late", tokens=["ok", "late"], pos_tags=["!", "A"]),
    ]
    return Dialogue(id="d", speakers=speakers, turns=turns, summary_text="s")


class TestBuildInput:
    def test_single_turn_layout(self):
        vocab = small_vocab()
        d = tagged_dialogue()
        enc = build_input(d, [0], vocab)
        assert enc.token_ids == [
            vocab.id_of("lilly"), vocab.sep_id, vocab.id_of("sorry"), vocab.eou_id,
        ]
        assert enc.label_ids == [IGNORE_ID, IGNORE_ID, TAG_TO_ID["!"], IGNORE_ID]
        assert enc.turn_boundaries == [3]

    def test_two_turns_two_boundaries(self):
        vocab = small_vocab()
        enc = build_input(tagged_dialogue(), [0, 1], vocab)
        assert len(enc.turn_boundaries) == 2
        assert all(enc.token_ids[b] == vocab.eou_id for b in enc.turn_boundaries)
        assert all(enc.label_ids[b] == IGNORE_ID for b in enc.turn_boundaries)

    def test_every_position_classified_exactly_once(self, toy_tagged, toy_vocab):
        for d in toy_tagged["train"]:
            enc = build_input(d, list(range(len(d.turns))), toy_vocab)
            n_tagged = sum(1 for x in enc.label_ids if x != IGNORE_ID)
            n_tokens = sum(len(t.tokens) for t in d.turns)
            assert n_tagged == n_tokens
            structural = sum(1 for x in enc.label_ids if x == IGNORE_ID)
            assert structural == len(enc.token_ids) - n_tokens

    def test_truncation_drops_whole_trailing_turn(self):
        vocab = small_vocab()
        d = tagged_dialogue()
        # turn 0 needs 4 positions, turn 1 needs 5; max_len 7 straddles turn 1.
        enc = build_input(d, [0, 1], vocab, max_len=7)
        assert enc.token_ids == build_input(d, [0], vocab).token_ids
        assert len(enc.turn_boundaries) == 1

    def test_first_turn_not_fitting_is_an_error(self):
        vocab = small_vocab()
        with pytest.raises(ValueError, match="max_len"):
            build_input(tagged_dialogue(), [0, 1], vocab, max_len=3)

    def test_untagged_turn_rejected(self):
        vocab = small_vocab()
        d = tagged_dialogue()
        d.turns[1].pos_tags = None
        with pytest.raises(ValueError, match="not tagged"):
            build_input(d, [0, 1], vocab)

    def test_unknown_tokens_map_to_unk(self):
        vocab = Vocabulary(["bob"])
        d = tagged_dialogue()
        enc = build_input(d, [0], vocab)
        assert enc.token_ids[0] == vocab.unk_id  # "lilly" not in vocab
        assert enc.token_ids[2] == vocab.unk_id  # "sorry" not in vocab
