"""Chat-text tokenization, a 25-tag POS inventory, and deterministic tagging.

The tokenizer is an ordered pattern cascade; at each position the first
matching rule wins:

1. URLs and email addresses
2. emoticons, both western (``:-)``, ``;P``, ``>:(``, ``XD``, ``<3``) and
   eastern (``^_^``, ``-_-``, ``T_T``) pattern classes
3. @-mentions
4. hashtags
5. numbers: times (``5:30``), decimals, thousands groups, currency, percents
6. runs of sentence punctuation kept whole (``!!``, ``?!``, ``...``)
7. words with apostrophe contractions kept whole (``don't``, ``i'll``)
8. any other non-space character as a single token

Joining tokens with single spaces and re-tokenizing reproduces the same
token list (idempotence), which downstream code relies on.

POS tags use the 25-symbol inventory common for conversational/social-media
text (N, O, ^, S, Z, V, A, R, !, D, P, &, T, X, Y, #, @, ~, U, E, $, ",", G,
L, M) plus a reserved IGNORE label for structural positions that must not
contribute to tag classification.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .corpus import Corpus, Dialogue, Utterance, load_corpus, with_dialogues
from .errors import DataError, TaggingError

# ---------------------------------------------------------------------------
# Tag inventory

TAGS = (
    "N", "O", "^", "S", "Z", "V", "A", "R", "!", "D", "P", "&", "T", "X", "Y",
    "#", "@", "~", "U", "E", "$", ",", "G", "L", "M",
)
N_TAGS = len(TAGS)
TAG_TO_ID = {t: i for i, t in enumerate(TAGS)}
IGNORE_LABEL = "IGNORE"
IGNORE_ID = -1

TAG_DESCRIPTIONS = {
    "N": "common noun",
    "O": "pronoun (personal/WH, not possessive)",
    "^": "proper noun",
    "S": "nominal + possessive",
    "Z": "proper noun + possessive",
    "V": "verb",
    "A": "adjective",
    "R": "adverb",
    "!": "interjection",
    "D": "determiner",
    "P": "pre/postposition or subordinating conjunction",
    "&": "coordinating conjunction",
    "T": "verb particle",
    "X": "existential there, predeterminer",
    "Y": "X + verbal",
    "#": "hashtag",
    "@": "at-mention",
    "~": "discourse marker",
    "U": "URL or email address",
    "E": "emoticon",
    "$": "numeral",
    ",": "punctuation",
    "G": "abbreviation, foreign word, garbage",
    "L": "nominal + verbal",
    "M": "proper noun + verbal",
}


@dataclass(frozen=True)
class TaggedUtterance:
    tokens: list[str]
    tags: list[str]

    def __post_init__(self):
        if len(self.tokens) != len(self.tags):
            raise ValueError(
                f"{len(self.tags)} tags for {len(self.tokens)} tokens"
            )
        for t in self.tags:
            if t not in TAG_TO_ID:
                raise ValueError(f"unknown tag {t!r}")


# ---------------------------------------------------------------------------
# Tokenizer

_URL = r"(?:https?://|www\.)\S+"
_EMAIL = r"[\w.+-]+@[\w-]+(?:\.[\w-]+)+"

# Western faces: optional brow, eyes, optional nose, one or more mouths.
_W_EYES = r"[:;=]"
_W_NOSE = r"[-o'^]?"
_W_MOUTH = r"[)(\]\[dDbBpP/\\|}{*oOsS30@$cC]+"
_WESTERN = rf"(?:>?{_W_EYES}{_W_NOSE}{_W_MOUTH})"
# Reversed faces such as "(:" or "D:".
_REVERSED = rf"(?:[)(\]\[dD/\\|}}{{]+{_W_NOSE}{_W_EYES}<?)"
_HEART = r"(?:</?3+)"
_XD = r"(?:[xX][dD]+)"
# Eastern faces: two "eye" characters around an underscore/dash center.
_E_EYE = r"[\^oOxXTtUuVv*;~'`°¬<>+-]"
_EASTERN = rf"(?:[<>]?{_E_EYE}[-_]{{1,3}}{_E_EYE}[<>;]?)"
_EMOTICON = rf"(?:{_WESTERN}|{_REVERSED}|{_HEART}|{_XD}|{_EASTERN})(?![A-Za-z0-9])"

_MENTION = r"@\w+"
_HASHTAG = r"#\w+"

_TIME = r"\d{1,2}:\d{2}(?::\d{2})?(?:[ap]m)?"
_NUMBER = rf"(?:{_TIME}|[$€£]?\d+(?:[.,]\d+)*%?)"

_PUNCT_RUN = r"[!?.,…;:]+"
_WORD = r"[^\W\d_]+(?:['’][^\W\d_]+)*"

TOKEN_PATTERN = re.compile(
    "|".join(
        [_URL, _EMAIL, _EMOTICON, _MENTION, _HASHTAG, _NUMBER, _PUNCT_RUN, _WORD, r"\S"]
    ),
    re.UNICODE,
)

_EMOTICON_RE = re.compile(rf"(?:{_EMOTICON})$")
_URL_RE = re.compile(rf"(?:{_URL}|{_EMAIL})$")
_MENTION_RE = re.compile(rf"{_MENTION}$")
_HASHTAG_RE = re.compile(rf"{_HASHTAG}$")
_NUMBER_RE = re.compile(rf"{_NUMBER}$")
_PUNCT_RE = re.compile(rf"{_PUNCT_RUN}$")


def tokenize(text: str) -> list[str]:
    """Split raw chat text into tokens via the documented pattern cascade."""
    return [m.group(0) for m in TOKEN_PATTERN.finditer(text)]


def detokenize(tokens) -> str:
    return " ".join(tokens)


# ---------------------------------------------------------------------------
# Taggers

# Lookup order among the closed-class lexicons; first file containing the
# token wins.
LEXICON_ORDER = ("O", "D", "P", "&", "T", "X", "L", "!", "~", "G")


def _normalize_for_lookup(token: str) -> str:
    return token.lower().replace("’", "'")


class LexiconRuleTagger:
    """Deterministic rule/lexicon tagger over the 25-tag inventory.

    Rule priority: emoticon -> E, URL/email -> U, @-mention -> @, hashtag ->
    #, number/currency -> $, punctuation run -> ",", closed-class lexicon
    hit (files named after their tag symbol), capitalized non-initial token
    -> ^, suffix heuristics (-ly -> R, -ed/-ing -> V, -ous/-ful -> A),
    default -> N. A pure function of the token list: same input, same output,
    on every platform.
    """

    name = "rule"

    def __init__(self, lexicon_dir: str | Path | None = None):
        self.lexicons: dict[str, frozenset[str]] = {}
        if lexicon_dir is None:
            root = resources.files("dialsum").joinpath("lexicons")
        else:
            root = Path(lexicon_dir)
        for tag in LEXICON_ORDER:
            entry = root.joinpath(tag)
            words = entry.read_text(encoding="utf-8").split("\n")
            self.lexicons[tag] = frozenset(
                _normalize_for_lookup(w.strip()) for w in words if w.strip()
            )

    def tag_token(self, token: str, index: int) -> str:
        if _EMOTICON_RE.fullmatch(token):
            return "E"
        if _URL_RE.fullmatch(token):
            return "U"
        if _MENTION_RE.fullmatch(token):
            return "@"
        if _HASHTAG_RE.fullmatch(token):
            return "#"
        if _NUMBER_RE.fullmatch(token):
            return "$"
        if _PUNCT_RE.fullmatch(token):
            return ","
        low = _normalize_for_lookup(token)
        for tag in LEXICON_ORDER:
            if low in self.lexicons[tag]:
                return tag
        if index > 0 and token[:1].isupper():
            return "^"
        if len(low) > 3 and low.endswith("ly"):
            return "R"
        if len(low) > 4 and low.endswith(("ed", "ing")):
            return "V"
        if len(low) > 4 and low.endswith(("ous", "ful")):
            return "A"
        return "N"

    def tag_tokens(self, tokens) -> list[str]:
        return [self.tag_token(tok, i) for i, tok in enumerate(tokens)]


def tag(tokens, tagger) -> TaggedUtterance:
    """Run `tagger` over `tokens` and validate its output contract."""
    tokens = list(tokens)
    try:
        tags = list(tagger.tag_tokens(tokens))
    except Exception as exc:
        raise TaggingError(f"tagger failed on token 0..{len(tokens) - 1}: {exc}") from exc
    if len(tags) != len(tokens):
        raise TaggingError(
            f"tagger returned {len(tags)} tags for {len(tokens)} tokens"
        )
    for i, t in enumerate(tags):
        if t not in TAG_TO_ID:
            raise TaggingError(f"tagger produced unknown tag {t!r} at token index {i}")
    return TaggedUtterance(tokens=tokens, tags=tags)


# ---------------------------------------------------------------------------
# Vocabulary

PAD, BOS, EOS, UNK, EOU, SEP = "<pad>", "<bos>", "<eos>", "<unk>", "[EOU]", "[SPK]"
SPECIALS = (PAD, BOS, EOS, UNK, EOU, SEP)


class Vocabulary:
    """Word-level token/id bijection with fixed special symbols (PAD id 0)."""

    def __init__(self, tokens: list[str]):
        self.id_to_token: list[str] = list(SPECIALS) + list(tokens)
        self.token_to_id: dict[str, int] = {
            t: i for i, t in enumerate(self.id_to_token)
        }
        if len(self.token_to_id) != len(self.id_to_token):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self) -> int:
        return len(self.id_to_token)

    @property
    def pad_id(self) -> int:
        return 0

    @property
    def bos_id(self) -> int:
        return 1

    @property
    def eos_id(self) -> int:
        return 2

    @property
    def unk_id(self) -> int:
        return 3

    @property
    def eou_id(self) -> int:
        return 4

    @property
    def sep_id(self) -> int:
        return 5

    def id_of(self, token: str) -> int:
        return self.token_to_id.get(token, self.unk_id)

    def token_of(self, idx: int) -> str:
        return self.id_to_token[idx]

    def encode(self, tokens) -> list[int]:
        return [self.id_of(t) for t in tokens]

    def decode(self, ids) -> list[str]:
        return [self.id_to_token[i] for i in ids]

    def save(self, path) -> None:
        Path(path).write_text(
            "\n".join(self.id_to_token) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path) -> "Vocabulary":
        lines = Path(path).read_text(encoding="utf-8").split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if tuple(lines[: len(SPECIALS)]) != SPECIALS:
            raise DataError(f"{path}: not a vocabulary file (bad special tokens)")
        return cls(lines[len(SPECIALS):])


def build_vocab(corpus: Corpus, min_freq: int = 1) -> Vocabulary:
    """Frequency vocabulary over utterance, summary, and speaker-name tokens.

    Tokens with frequency >= `min_freq` receive ids in descending-frequency
    order, ties broken lexicographically; everything else maps to UNK.
    """
    if min_freq < 1:
        raise ValueError(f"min_freq must be >= 1, got {min_freq}")
    counts: Counter[str] = Counter()
    for d in corpus:
        if d.summary_tokens is None:
            raise ValueError(f"dialogue {d.id!r}: corpus not tokenized (summary)")
        counts.update(d.summary_tokens)
        for i, turn in enumerate(d.turns):
            if turn.tokens is None:
                raise ValueError(f"dialogue {d.id!r}: corpus not tokenized (turn {i})")
            counts.update(turn.tokens)
            counts.update(tokenize(d.speaker_name(turn.speaker_id)))
    kept = sorted(
        (t for t, c in counts.items() if c >= min_freq and t not in SPECIALS),
        key=lambda t: (-counts[t], t),
    )
    return Vocabulary(kept)


# ---------------------------------------------------------------------------
# Corpus-level preprocessing

def preprocess_corpus(corpus: Corpus, tagger) -> Corpus:
    """Tokenize and tag every utterance and tokenize every summary.

    Turns whose text yields no tokens are dropped (and a dialogue losing all
    turns is dropped entirely) so the tokenized invariants hold.
    """
    out: list[Dialogue] = []
    for d in corpus:
        turns = []
        for turn in d.turns:
            if turn.tokens is None:
                tokens = tokenize(turn.raw_text)
            else:
                tokens = turn.tokens
            if not tokens:
                continue
            tagged = tag(tokens, tagger) if turn.pos_tags is None else None
            turns.append(
                Utterance(
                    speaker_id=turn.speaker_id,
                    raw_text=turn.raw_text,
                    tokens=tokens,
                    pos_tags=turn.pos_tags if tagged is None else tagged.tags,
                )
            )
        if not turns:
            continue
        summary_tokens = (
            d.summary_tokens if d.summary_tokens is not None else tokenize(d.summary_text)
        )
        out.append(
            Dialogue(
                id=d.id,
                speakers=d.speakers,
                turns=turns,
                summary_text=d.summary_text,
                summary_tokens=summary_tokens,
            )
        )
    return with_dialogues(corpus, out)


def import_tags(corpus: Corpus, annotated_path) -> Corpus:
    """Attach tags from an annotated JSON Lines file to a tokenized corpus.

    The annotation file must cover exactly the same dialogues with the same
    per-turn token counts; any mismatch rejects the whole import.
    """
    annotations = load_corpus(annotated_path, format="annotated", split=corpus.split)
    by_id = {d.id: d for d in annotations}
    if len(annotations) != len(corpus):
        raise DataError(
            f"annotation file has {len(annotations)} dialogues, corpus has {len(corpus)}"
        )
    out: list[Dialogue] = []
    for d in corpus:
        ann = by_id.get(d.id)
        if ann is None:
            raise DataError(f"dialogue {d.id!r}: no annotation record")
        if len(ann.turns) != len(d.turns):
            raise DataError(
                f"dialogue {d.id!r}: annotation has {len(ann.turns)} turns, "
                f"corpus has {len(d.turns)}"
            )
        turns = []
        for j, (turn, ann_turn) in enumerate(zip(d.turns, ann.turns)):
            if turn.tokens is None:
                raise ValueError(f"dialogue {d.id!r}: turn {j} not tokenized")
            if ann_turn.pos_tags is None:
                raise DataError(f"dialogue {d.id!r}: turn {j} annotation carries no tags")
            if len(ann_turn.tokens) != len(turn.tokens):
                raise DataError(
                    f"dialogue {d.id!r}: turn {j} token count mismatch "
                    f"({len(ann_turn.tokens)} annotated vs {len(turn.tokens)})"
                )
            turns.append(
                Utterance(
                    speaker_id=turn.speaker_id,
                    raw_text=turn.raw_text,
                    tokens=turn.tokens,
                    pos_tags=list(ann_turn.pos_tags),
                )
            )
        out.append(
            Dialogue(
                id=d.id,
                speakers=d.speakers,
                turns=turns,
                summary_text=d.summary_text,
                summary_tokens=d.summary_tokens,
            )
        )
    return with_dialogues(corpus, out)
