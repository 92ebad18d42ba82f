"""Shared fixtures-by-hand: tiny model builders and independent oracles.

The oracles here deliberately avoid the library code paths they check:
brute-force n-gram counting, all-subsequence LCS, exhaustive subset
selection, exhaustive sequence enumeration for beam search, and central
finite differences for gradients.
"""

from __future__ import annotations

import itertools

import numpy as np

from dialsum import autograd as ag
from dialsum.corpus import Corpus, Dialogue, Speaker, Utterance
from dialsum.model import Batch, ModelConfig, Seq2SeqModel
from dialsum.tokenizer import LexiconRuleTagger
from dialsum.trainer import combined_loss, ds_loss, pos_loss


# ---------------------------------------------------------------------------
# Tiny models and batches


def tiny_config(vocab_size=12, **overrides) -> ModelConfig:
    defaults = dict(
        vocab_size=vocab_size,
        d_model=8,
        n_enc_layers=1,
        n_dec_layers=1,
        n_heads=2,
        d_ff=16,
        max_len=16,
        seed=7,
    )
    defaults.update(overrides)
    return ModelConfig(**defaults)


def tiny_model(vocab_size=12, **overrides) -> Seq2SeqModel:
    return Seq2SeqModel(tiny_config(vocab_size, **overrides))


def random_batch(rng: np.random.Generator, config: ModelConfig, batch=2, s=5, t=4) -> Batch:
    enc_ids = rng.integers(4, config.vocab_size, size=(batch, s))
    enc_mask = np.ones((batch, s), dtype=bool)
    labels = rng.integers(0, config.n_tags, size=(batch, s))
    labels[rng.random((batch, s)) < 0.3] = -1
    dec_in = rng.integers(4, config.vocab_size, size=(batch, t))
    dec_in[:, 0] = 1
    targets = rng.integers(4, config.vocab_size, size=(batch, t))
    targets[:, -1] = 2
    return Batch(enc_ids=enc_ids, enc_mask=enc_mask, labels=labels, dec_in=dec_in, targets=targets)


def multitask_loss(model: Seq2SeqModel, batch: Batch, lam: float):
    lm_logits, pos_logits = model.forward_multitask(batch)
    return combined_loss(pos_loss(pos_logits, batch.labels), ds_loss(lm_logits, batch.targets), lam)


def finite_difference_check(model: Seq2SeqModel, batch: Batch, lam: float, h=1e-5):
    """Central-difference gradients for every parameter tensor.

    Returns {name: max relative error} against the analytic gradients.
    """
    model.params.zero_grads()
    total = multitask_loss(model, batch, lam)
    ag.backward(total)
    analytic = {
        n: (t.grad.copy() if t.grad is not None else np.zeros_like(t.value))
        for n, t in model.params.items()
    }
    errors = {}
    for name, tensor in model.params.items():
        flat = tensor.value.reshape(-1)
        numeric = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = multitask_loss(model, batch, lam).value
            flat[i] = orig - h
            down = multitask_loss(model, batch, lam).value
            flat[i] = orig
            numeric[i] = (up - down) / (2 * h)
        a = analytic[name].reshape(-1)
        denom = np.maximum(1e-6, np.abs(a) + np.abs(numeric))
        errors[name] = float((np.abs(a - numeric) / denom).max())
    return errors


# ---------------------------------------------------------------------------
# ROUGE oracles


def ngram_overlap_brute(cand: list, ref: list, n: int):
    """Clipped overlap / counts by explicit enumeration."""
    cand_grams = [tuple(cand[i : i + n]) for i in range(len(cand) - n + 1)]
    ref_grams = [tuple(ref[i : i + n]) for i in range(len(ref) - n + 1)]
    overlap = 0
    remaining = list(ref_grams)
    for g in cand_grams:
        if g in remaining:
            remaining.remove(g)
            overlap += 1
    return overlap, len(cand_grams), len(ref_grams)


def lcs_brute(a: list, b: list) -> int:
    """Longest common subsequence by enumerating all subsequences of `a`."""
    best = 0
    for r in range(len(a), 0, -1):
        if r <= best:
            break
        for subset in itertools.combinations(range(len(a)), r):
            sub = [a[i] for i in subset]
            it = iter(b)
            if all(x in it for x in sub):
                best = r
                break
    return best


# ---------------------------------------------------------------------------
# Selection oracle


def select_brute(lengths: list[int], kind: str, n: int) -> list[int]:
    """Exhaustive reference for turn selection with the documented tie-breaks."""
    total = len(lengths)
    if kind == "FULL" or n >= total:
        return list(range(total))
    if kind == "LEAD":
        return list(range(n))
    if kind == "MIDDLE":
        start = (total - n) // 2
        return list(range(start, start + n))
    assert kind == "LONGEST"
    best = None
    for subset in itertools.combinations(range(total), n):
        score = sum(lengths[i] for i in subset)
        key = (-score, subset)
        if best is None or key < best:
            best = key
    return list(best[1])


# ---------------------------------------------------------------------------
# Decoding oracle


def enumerate_best(model: Seq2SeqModel, enc_input, bos_id: int, eos_id: int, max_new: int):
    """Exhaustively score every possible output sequence.

    A sequence ends at the first EOS or at `max_new` tokens. Returns the
    (tokens-without-specials, logprob) of the best sequence under the same
    tie-break as the beam: highest score, then lexicographically smallest
    id sequence.
    """
    enc_out = model.encode(enc_input)
    vocab = model.config.vocab_size
    best = None

    def visit(prefix: list[int], score: float):
        nonlocal best
        lp = model.next_logprobs([prefix], enc_out)[0]
        for tok in range(vocab):
            seq_score = score + float(lp[tok])
            seq = prefix + [tok]
            if tok == eos_id or len(seq) - 1 == max_new:
                key = (-seq_score, seq)
                if best is None or key < best:
                    best = key
            else:
                visit(seq, seq_score)

    visit([bos_id], 0.0)
    tokens = best[1][1:]
    if tokens and tokens[-1] == eos_id:
        tokens = tokens[:-1]
    return tokens, -best[0]


# ---------------------------------------------------------------------------
# Synthetic rule-tagged corpus

_WORD_BANK = [
    "i", "you", "we", "they",
    "the", "a", "some",
    "in", "on", "at", "with",
    "and", "but", "or",
    "up", "out", "back",
    "there", "all", "both",
    "i'm", "it's", "let's",
    "yes", "ok", "hey", "wow",
    "btw", "idk", "fyi",
    "dog", "cat", "pizza", "movie", "game", "bus", "table", "coffee", "rain", "park",
    "really", "quickly", "slowly",
    "walked", "running", "talking", "jumped",
    "famous", "careful", "nervous",
    "5", "20", "3:30", "70%",
    ":)", ":(", "^_^",
    "!!", "?", "...",
    "http://x.io", "@sam", "#fun",
    "Rex", "Paris", "Mona",
]


def synthetic_rule_corpus(n_dialogues: int, seed: int, split: str = "train") -> Corpus:
    """Random dialogues whose tags come from the bundled rule tagger."""
    rng = np.random.default_rng(seed)
    rule = LexiconRuleTagger()
    dialogues = []
    for k in range(n_dialogues):
        n_turns = int(rng.integers(2, 4))
        speakers = [Speaker(0, "ann"), Speaker(1, "bob")]
        turns = []
        for j in range(n_turns):
            length = int(rng.integers(4, 9))
            tokens = [str(_WORD_BANK[i]) for i in rng.integers(0, len(_WORD_BANK), size=length)]
            tags = rule.tag_tokens(tokens)
            turns.append(
                Utterance(
                    speaker_id=j % 2,
                    raw_text=" ".join(tokens),
                    tokens=tokens,
                    pos_tags=tags,
                )
            )
        summary = turns[0].tokens[:5]
        dialogues.append(
            Dialogue(
                id=f"syn{k:03d}",
                speakers=speakers,
                turns=turns,
                summary_text=" ".join(summary),
                summary_tokens=summary,
            )
        )
    return Corpus(split=split, dialogues=dialogues)
