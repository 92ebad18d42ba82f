"""Utterance selection (LEAD / MIDDLE / LONGEST / FULL) and input flattening.

A selected dialogue becomes one flat id sequence laid out per turn as

    speaker-name tokens, [SPK], utterance tokens, [EOU]

with a parallel label channel that carries the POS tag id for utterance
tokens and IGNORE everywhere structural. Truncation to ``max_len`` only ever
drops whole trailing turns, never part of an utterance.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import Dialogue
from .tokenizer import IGNORE_ID, TAG_TO_ID, Vocabulary, tokenize

LEAD = "LEAD"
MIDDLE = "MIDDLE"
LONGEST = "LONGEST"
FULL = "FULL"
STRATEGY_KINDS = (LEAD, MIDDLE, LONGEST, FULL)


@dataclass(frozen=True)
class SelectionStrategy:
    kind: str
    n: int | None = None

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"kind must be one of {STRATEGY_KINDS}, got {self.kind!r}")
        if self.kind == FULL:
            if self.n is not None:
                raise ValueError("FULL takes no n")
        elif self.n is None or self.n < 1:
            raise ValueError(f"{self.kind} requires n >= 1, got {self.n}")

    @classmethod
    def parse(cls, kind: str, n: int | None) -> "SelectionStrategy":
        kind = kind.upper()
        return cls(kind, None if kind == FULL else n)


def _turn_length(turn) -> int:
    if turn.tokens is not None:
        return len(turn.tokens)
    return len(turn.raw_text.split())


def select(dialogue: Dialogue, strategy: SelectionStrategy) -> list[int]:
    """Pick turn indices for the encoder, returned in ascending order.

    LEAD takes the first n turns, MIDDLE a centered contiguous block of n
    starting at floor((L - n) / 2), LONGEST the n turns with the most tokens
    (ties to the earlier index) re-sorted chronologically, FULL everything.
    Requests of n >= L degrade to FULL behaviour.
    """
    length = len(dialogue.turns)
    if strategy.kind == FULL or strategy.n >= length:
        return list(range(length))
    n = strategy.n
    if strategy.kind == LEAD:
        return list(range(n))
    if strategy.kind == MIDDLE:
        start = (length - n) // 2
        return list(range(start, start + n))
    # LONGEST
    order = sorted(range(length), key=lambda i: (-_turn_length(dialogue.turns[i]), i))
    return sorted(order[:n])


@dataclass
class EncodedInput:
    token_ids: list[int]
    label_ids: list[int]
    turn_boundaries: list[int]

    def __post_init__(self):
        if len(self.token_ids) != len(self.label_ids):
            raise ValueError("token and label channels differ in length")

    def __len__(self) -> int:
        return len(self.token_ids)


def build_input(
    dialogue: Dialogue,
    selected: list[int],
    vocab: Vocabulary,
    max_len: int | None = None,
) -> EncodedInput:
    """Flatten selected tagged turns into the encoder id/label sequence."""
    token_ids: list[int] = []
    label_ids: list[int] = []
    boundaries: list[int] = []
    for pos, idx in enumerate(selected):
        turn = dialogue.turns[idx]
        if turn.tokens is None or turn.pos_tags is None:
            raise ValueError(
                f"dialogue {dialogue.id!r}: selected turn {idx} is not tagged"
            )
        name_ids = vocab.encode(tokenize(dialogue.speaker_name(turn.speaker_id)))
        block_ids = name_ids + [vocab.sep_id] + vocab.encode(turn.tokens) + [vocab.eou_id]
        block_labels = (
            [IGNORE_ID] * (len(name_ids) + 1)
            + [TAG_TO_ID[t] for t in turn.pos_tags]
            + [IGNORE_ID]
        )
        if max_len is not None and len(token_ids) + len(block_ids) > max_len:
            if pos == 0:
                raise ValueError(
                    f"dialogue {dialogue.id!r}: first selected turn needs "
                    f"{len(block_ids)} positions but max_len is {max_len}"
                )
            break
        token_ids.extend(block_ids)
        label_ids.extend(block_labels)
        boundaries.append(len(token_ids) - 1)
    return EncodedInput(token_ids=token_ids, label_ids=label_ids, turn_boundaries=boundaries)
