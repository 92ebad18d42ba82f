"""ROUGE-1/2/L with precision, recall, and F1, plus corpus aggregation.

Scoring convention, pinned because packages disagree: candidate and
reference are lowercased and whitespace-tokenized (`normalize_text`);
ROUGE-N uses clipped n-gram counts; ROUGE-L uses the longest common
subsequence; corpus scores are unweighted means of per-pair scores.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def _score(overlap: int, n_cand: int, n_ref: int) -> RougeScore:
    p = overlap / n_cand if n_cand else 0.0
    r = overlap / n_ref if n_ref else 0.0
    return RougeScore(precision=p, recall=r, f1=_f1(p, r))


def normalize_text(text: str) -> list[str]:
    return text.lower().split()


def reference_tokens(dialogue) -> list[str]:
    """Scoring-side view of a reference summary.

    Uses the corpus tokenization when present (falling back to the chat
    tokenizer) so candidate and reference agree on punctuation splitting,
    then applies the same lowercase + whitespace normalization as
    candidates.
    """
    from .tokenizer import detokenize, tokenize  # local import to avoid a cycle

    tokens = dialogue.summary_tokens
    if tokens is None:
        tokens = tokenize(dialogue.summary_text)
    return normalize_text(detokenize(tokens))


def _ngrams(tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate, reference, n: int) -> RougeScore:
    """Clipped n-gram overlap score."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    cand = _ngrams(list(candidate), n)
    ref = _ngrams(list(reference), n)
    overlap = sum(min(count, ref[g]) for g, count in cand.items())
    return _score(overlap, sum(cand.values()), sum(ref.values()))


def _lcs_length(a, b) -> int:
    # Classic O(len(a) * len(b)) dynamic program, two rows at a time.
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate, reference) -> RougeScore:
    """Longest-common-subsequence score."""
    cand = list(candidate)
    ref = list(reference)
    return _score(_lcs_length(cand, ref), len(cand), len(ref))


def corpus_rouge(pairs, extra_metrics: dict | None = None) -> dict[str, RougeScore]:
    """Mean per-pair ROUGE-1/2/L over (candidate tokens, reference tokens) pairs.

    `extra_metrics` maps a column name to a callable (candidate, reference)
    -> RougeScore, the hook for similarity metrics this package does not
    ship (embedding-based scorers and the like).
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("corpus_rouge needs at least one pair")
    metrics: dict[str, list[RougeScore]] = {"rouge1": [], "rouge2": [], "rougeL": []}
    for name in extra_metrics or {}:
        metrics[name] = []
    for cand, ref in pairs:
        metrics["rouge1"].append(rouge_n(cand, ref, 1))
        metrics["rouge2"].append(rouge_n(cand, ref, 2))
        metrics["rougeL"].append(rouge_l(cand, ref))
        for name, fn in (extra_metrics or {}).items():
            metrics[name].append(fn(cand, ref))
    out = {}
    for name, scores in metrics.items():
        k = len(scores)
        out[name] = RougeScore(
            precision=sum(s.precision for s in scores) / k,
            recall=sum(s.recall for s in scores) / k,
            f1=sum(s.f1 for s in scores) / k,
        )
    return out
