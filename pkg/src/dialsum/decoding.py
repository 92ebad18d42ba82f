"""Greedy and beam-search decoding plus generated-length accounting.

Beam scores are raw sums of token log-probabilities; there is no length
normalization. Ties anywhere (argmax, beam pruning, final selection) break
toward the lower token id / lexicographically smaller id sequence, so
decoding is fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import EncoderOutput, Seq2SeqModel


@dataclass
class Hypothesis:
    tokens: list[int]      # includes the leading BOS
    logprob: float
    finished: bool = False


@dataclass
class DecodeResult:
    tokens: list[int]      # generated ids, BOS/EOS stripped
    logprob: float


class ModelScorer:
    """Adapter giving decoders a next-token log-probability interface."""

    def __init__(self, model: Seq2SeqModel, enc_out: EncoderOutput):
        self.model = model
        self.enc_out = enc_out

    def log_probs(self, prefixes: list[list[int]]) -> np.ndarray:
        return self.model.next_logprobs(prefixes, self.enc_out)


def _strip(tokens: list[int], eos_id: int) -> list[int]:
    out = tokens[1:]
    if out and out[-1] == eos_id:
        out.pop()
    return out


def greedy_from_scorer(scorer, bos_id: int, eos_id: int, max_new_tokens: int) -> DecodeResult:
    prefix = [bos_id]
    logprob = 0.0
    for _ in range(max_new_tokens):
        lp = scorer.log_probs([prefix])[0]
        nxt = int(np.argmax(lp))  # first maximum = lowest id on ties
        logprob += float(lp[nxt])
        if nxt == eos_id:
            break
        prefix.append(nxt)
    return DecodeResult(tokens=prefix[1:], logprob=logprob)


def beam_from_scorer(scorer, beam: int, bos_id: int, eos_id: int, max_new_tokens: int) -> DecodeResult:
    """Breadth-limited best-first search over cumulative log-probability.

    Keeps the top-`beam` hypotheses at every step; hypotheses that emit EOS
    (or hit the length limit) are set aside as finished. Returns the
    highest-scoring finished hypothesis, falling back to length-limited ones
    which are finished by definition.
    """
    if beam < 1:
        raise ValueError(f"beam must be >= 1, got {beam}")
    active = [Hypothesis(tokens=[bos_id], logprob=0.0)]
    finished: list[Hypothesis] = []
    for step in range(max_new_tokens):
        lps = scorer.log_probs([h.tokens for h in active])
        candidates = []
        for h, lp in zip(active, lps):
            for tok in range(lp.shape[0]):
                candidates.append((h.logprob + float(lp[tok]), h.tokens + [tok]))
        candidates.sort(key=lambda c: (-c[0], c[1]))
        active = []
        at_limit = step == max_new_tokens - 1
        for score, tokens in candidates[:beam]:
            hyp = Hypothesis(tokens=tokens, logprob=score)
            if tokens[-1] == eos_id or at_limit:
                hyp.finished = True
                finished.append(hyp)
            else:
                active.append(hyp)
        if not active:
            break
    best = min(finished, key=lambda h: (-h.logprob, h.tokens))
    return DecodeResult(tokens=_strip(best.tokens, eos_id), logprob=best.logprob)


def greedy_decode(model: Seq2SeqModel, enc_input, bos_id: int, eos_id: int, max_new_tokens: int) -> DecodeResult:
    """Argmax decoding; ties go to the lower token id."""
    scorer = ModelScorer(model, model.encode(enc_input))
    return greedy_from_scorer(scorer, bos_id, eos_id, max_new_tokens)


def beam_search(model: Seq2SeqModel, enc_input, beam: int, bos_id: int, eos_id: int, max_new_tokens: int) -> DecodeResult:
    scorer = ModelScorer(model, model.encode(enc_input))
    return beam_from_scorer(scorer, beam, bos_id, eos_id, max_new_tokens)


def avg_generated_words(summaries: list[list[str]]) -> float:
    """Mean whitespace word count of detokenized summaries."""
    if not summaries:
        raise ValueError("avg_generated_words needs at least one summary")
    return sum(len(" ".join(s).split()) for s in summaries) / len(summaries)
