"""Dialogue corpus data model, loaders/serializers, and summary statistics.

Two on-disk formats are supported:

* ``raw-chat``: a JSON array of ``{"id", "dialogue", "summary"}`` objects where
  ``dialogue`` is a newline-separated transcript of ``Name: message`` lines
  (the shape chat-summarization corpora are usually distributed in).
* ``annotated``: JSON Lines, one dialogue per line, carrying tokenized turns
  with optional per-token POS tags:
  ``{"id", "turns": [{"speaker", "tokens", "tags"}], "summary_tokens"}``.

Statistics use plain whitespace tokenization of the summary text so the
reported numbers are reproducible without any model-side tokenizer.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import DataError, EmptyCorpusError

SPLITS = ("train", "dev", "test")

RAW_CHAT = "raw-chat"
ANNOTATED = "annotated"
FORMATS = (RAW_CHAT, ANNOTATED)


@dataclass(frozen=True)
class Speaker:
    id: int
    name: str


@dataclass
class Utterance:
    speaker_id: int
    raw_text: str
    tokens: list[str] | None = None
    pos_tags: list[str] | None = None

    def __post_init__(self):
        if self.tokens is not None and len(self.tokens) == 0:
            raise ValueError("tokens must be non-empty when present")
        if self.pos_tags is not None:
            if self.tokens is None:
                raise ValueError("pos_tags require tokens")
            if len(self.pos_tags) != len(self.tokens):
                raise ValueError(
                    f"{len(self.pos_tags)} tags for {len(self.tokens)} tokens"
                )


@dataclass
class Dialogue:
    id: str
    speakers: list[Speaker]
    turns: list[Utterance]
    summary_text: str
    summary_tokens: list[str] | None = None

    def __post_init__(self):
        if not self.turns:
            raise ValueError(f"dialogue {self.id!r} has no turns")
        names = [s.name for s in self.speakers]
        if len(set(names)) != len(names):
            raise ValueError(f"dialogue {self.id!r} has duplicate speaker names")
        ids = {s.id for s in self.speakers}
        for i, turn in enumerate(self.turns):
            if turn.speaker_id not in ids:
                raise ValueError(
                    f"dialogue {self.id!r} turn {i} references unknown speaker "
                    f"{turn.speaker_id}"
                )

    def speaker_name(self, speaker_id: int) -> str:
        for s in self.speakers:
            if s.id == speaker_id:
                return s.name
        raise KeyError(speaker_id)

    @property
    def n_speakers(self) -> int:
        return len(self.speakers)


@dataclass
class Corpus:
    split: str
    dialogues: list[Dialogue] = field(default_factory=list)

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")
        seen = set()
        for d in self.dialogues:
            if d.id in seen:
                raise DataError(f"duplicate dialogue id {d.id!r} in split {self.split}")
            seen.add(d.id)

    def __len__(self) -> int:
        return len(self.dialogues)

    def __iter__(self):
        return iter(self.dialogues)


@dataclass(frozen=True)
class Triple:
    mean: float
    min: int
    max: int


@dataclass(frozen=True)
class CorpusStats:
    split: str
    n_conversations: int
    summary_length: Triple
    speakers: Triple
    turns: Triple


def _infer_split(path: Path, split: str | None) -> str:
    if split is not None:
        return split
    stem = path.stem.lower()
    for s in SPLITS:
        if s in stem or (s == "dev" and "val" in stem):
            return s
    return "train"


def _parse_raw_dialogue(record, index: int) -> Dialogue:
    if not isinstance(record, dict):
        raise DataError(f"record {index}: expected an object, got {type(record).__name__}")
    for key in ("id", "dialogue", "summary"):
        if key not in record or not isinstance(record[key], str):
            raise DataError(f"record {index}: missing or non-string field {key!r}")
    speakers: dict[str, Speaker] = {}
    turns: list[Utterance] = []
    for line in record["dialogue"].splitlines():
        if not line.strip():
            continue
        if ": " in line:
            name, text = line.split(": ", 1)
            name = name.strip()
            if not name:
                raise DataError(f"record {index}: empty speaker name in field 'dialogue'")
            if name not in speakers:
                speakers[name] = Speaker(id=len(speakers), name=name)
            turns.append(Utterance(speaker_id=speakers[name].id, raw_text=text))
        else:
            # Continuation of a multi-line message.
            if not turns:
                raise DataError(
                    f"record {index}: field 'dialogue' starts without a 'Name: ' line"
                )
            turns[-1].raw_text = turns[-1].raw_text + "\n" + line
    if not turns:
        raise DataError(f"record {index}: field 'dialogue' contains no utterances")
    return Dialogue(
        id=record["id"],
        speakers=list(speakers.values()),
        turns=turns,
        summary_text=record["summary"],
    )


def _parse_annotated_dialogue(record, index: int) -> Dialogue:
    if not isinstance(record, dict):
        raise DataError(f"record {index}: expected an object")
    if "id" not in record or "turns" not in record or "summary_tokens" not in record:
        raise DataError(f"record {index}: missing one of 'id', 'turns', 'summary_tokens'")
    speakers: dict[str, Speaker] = {}
    turns = []
    for j, t in enumerate(record["turns"]):
        try:
            name = t["speaker"]
            tokens = list(t["tokens"])
        except (KeyError, TypeError) as exc:
            raise DataError(f"record {index}: turn {j} is malformed ({exc})") from exc
        if not tokens:
            raise DataError(f"record {index}: turn {j} has no tokens")
        tags = t.get("tags")
        if tags is not None:
            tags = list(tags)
            if len(tags) != len(tokens):
                raise DataError(
                    f"record {index}: turn {j} has {len(tags)} tags for "
                    f"{len(tokens)} tokens"
                )
        if name not in speakers:
            speakers[name] = Speaker(id=len(speakers), name=name)
        turns.append(
            Utterance(
                speaker_id=speakers[name].id,
                raw_text=" ".join(tokens),
                tokens=tokens,
                pos_tags=tags,
            )
        )
    if not turns:
        raise DataError(f"record {index}: no turns")
    summary_tokens = list(record["summary_tokens"])
    return Dialogue(
        id=record["id"],
        speakers=list(speakers.values()),
        turns=turns,
        summary_text=" ".join(summary_tokens),
        summary_tokens=summary_tokens,
    )


def load_corpus(path, format: str = RAW_CHAT, split: str | None = None) -> Corpus:
    """Load a corpus file in ``raw-chat`` or ``annotated`` format.

    The split label is taken from `split` if given, else guessed from the
    file name, defaulting to ``train``.
    """
    path = Path(path)
    if format not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {format!r}")
    if not path.exists():
        raise DataError(f"corpus file not found: {path}")
    text = path.read_text(encoding="utf-8")
    dialogues: list[Dialogue] = []
    if format == RAW_CHAT:
        try:
            records = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(records, list):
            raise DataError(f"{path}: expected a JSON array of dialogue objects")
        for i, rec in enumerate(records):
            dialogues.append(_parse_raw_dialogue(rec, i))
    else:
        for i, line in enumerate(text.splitlines()):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: record {i}: invalid JSON ({exc})") from exc
            dialogues.append(_parse_annotated_dialogue(rec, i))
    if not dialogues:
        raise EmptyCorpusError(f"{path}: corpus is empty")
    return Corpus(split=_infer_split(path, split), dialogues=dialogues)


def raw_chat_records(corpus: Corpus) -> list[dict]:
    records = []
    for d in corpus:
        lines = [f"{d.speaker_name(t.speaker_id)}: {t.raw_text}" for t in d.turns]
        records.append(
            {"id": d.id, "dialogue": "\n".join(lines), "summary": d.summary_text}
        )
    return records


def annotated_records(corpus: Corpus) -> list[dict]:
    records = []
    for d in corpus:
        if d.summary_tokens is None:
            raise ValueError(f"dialogue {d.id!r}: summary not tokenized")
        turns = []
        for i, t in enumerate(d.turns):
            if t.tokens is None:
                raise ValueError(f"dialogue {d.id!r}: turn {i} not tokenized")
            turns.append(
                {
                    "speaker": d.speaker_name(t.speaker_id),
                    "tokens": t.tokens,
                    "tags": t.pos_tags,
                }
            )
        records.append({"id": d.id, "turns": turns, "summary_tokens": d.summary_tokens})
    return records


def save_corpus(corpus: Corpus, path, format: str = ANNOTATED) -> None:
    path = Path(path)
    if format == RAW_CHAT:
        payload = json.dumps(raw_chat_records(corpus), ensure_ascii=False, indent=1)
        path.write_text(payload + "\n", encoding="utf-8")
    elif format == ANNOTATED:
        lines = [json.dumps(r, ensure_ascii=False) for r in annotated_records(corpus)]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"format must be one of {FORMATS}, got {format!r}")


def _triple(values) -> Triple:
    values = list(values)
    return Triple(mean=sum(values) / len(values), min=min(values), max=max(values))


def compute_stats(corpus: Corpus) -> CorpusStats:
    """Per-split counts and mean/min/max of summary length, speakers, turns.

    Summary length is the whitespace word count of the summary text.
    """
    if len(corpus) == 0:
        raise EmptyCorpusError("cannot compute statistics of an empty corpus")
    return CorpusStats(
        split=corpus.split,
        n_conversations=len(corpus),
        summary_length=_triple(len(d.summary_text.split()) for d in corpus),
        speakers=_triple(d.n_speakers for d in corpus),
        turns=_triple(len(d.turns) for d in corpus),
    )


def utterance_density(corpus: Corpus, bin_width: int) -> dict[int, int]:
    """Histogram of turn counts, keyed by bin lower bound."""
    if bin_width < 1:
        raise ValueError(f"bin_width must be >= 1, got {bin_width}")
    hist: dict[int, int] = {}
    for d in corpus:
        lo = (len(d.turns) // bin_width) * bin_width
        hist[lo] = hist.get(lo, 0) + 1
    return dict(sorted(hist.items()))


STATS_CSV_COLUMNS = (
    "split",
    "n_conv",
    "sl_mean",
    "sl_min",
    "sl_max",
    "spk_mean",
    "spk_min",
    "spk_max",
    "turn_mean",
    "turn_min",
    "turn_max",
)


def stats_csv_row(stats: CorpusStats) -> list[str]:
    return [
        stats.split,
        str(stats.n_conversations),
        f"{stats.summary_length.mean:.2f}",
        str(stats.summary_length.min),
        str(stats.summary_length.max),
        f"{stats.speakers.mean:.2f}",
        str(stats.speakers.min),
        str(stats.speakers.max),
        f"{stats.turns.mean:.2f}",
        str(stats.turns.min),
        str(stats.turns.max),
    ]


def format_stats_table(stats_list: list[CorpusStats]) -> str:
    """Fixed-width table mirroring the usual corpus-statistics report layout."""
    header = (
        f"{'split':<6} {'n_conv':>7} "
        f"{'s.l mean':>9} {'s.l range':>12} "
        f"{'spk mean':>9} {'spk range':>12} "
        f"{'turn mean':>10} {'turn range':>12}"
    )
    lines = [header, "-" * len(header)]
    for s in stats_list:
        lines.append(
            f"{s.split:<6} {s.n_conversations:>7} "
            f"{s.summary_length.mean:>9.2f} "
            f"{f'[{s.summary_length.min}, {s.summary_length.max}]':>12} "
            f"{s.speakers.mean:>9.2f} "
            f"{f'[{s.speakers.min}, {s.speakers.max}]':>12} "
            f"{s.turns.mean:>10.2f} "
            f"{f'[{s.turns.min}, {s.turns.max}]':>12}"
        )
    return "\n".join(lines)


def stats_csv(stats_list: list[CorpusStats]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(STATS_CSV_COLUMNS)
    for s in stats_list:
        writer.writerow(stats_csv_row(s))
    return buf.getvalue()


def with_dialogues(corpus: Corpus, dialogues: list[Dialogue]) -> Corpus:
    return replace(corpus, dialogues=dialogues)
