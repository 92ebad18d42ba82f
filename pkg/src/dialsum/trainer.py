"""Joint training of summary generation and POS tagging.

The objective is a convex mix of the two task losses,

    total = lam * pos + (1 - lam) * summary,

each a mean negative log-likelihood over its contributing (non-ignored)
positions. Optimization is Adam with bias correction and global-norm
gradient clipping. After each epoch the dev split is decoded with beam
search and scored with ROUGE-1 F1; the best-scoring epoch's parameters are
kept and training stops once `patience` epochs pass without improvement.

Everything is driven by explicit seeds: batch order, parameter init, and
dropout all derive from TrainConfig.seed, so identical configs produce
identical loss traces and checkpoints.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .corpus import Corpus
from .errors import TrainingDivergedError
from .decoding import beam_search
from .model import Batch, ModelConfig, ModelParameters, Seq2SeqModel
from .rouge import corpus_rouge, normalize_text, reference_tokens
from .selection import SelectionStrategy, build_input
from .selection import select as select_turns
from .tokenizer import IGNORE_ID, Vocabulary, detokenize


@dataclass(frozen=True)
class TrainConfig:
    lam: float = 0.1
    learning_rate: float = 3e-4
    epochs: int = 20
    batch_size: int = 8
    beam_size: int = 4
    patience: int = 5
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    clip_norm: float = 1.0
    eval_every: int = 1

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lam must be in [0, 1], got {self.lam}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        for name in ("epochs", "batch_size", "beam_size", "eval_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.patience < 0:
            raise ValueError("patience must be >= 0")


@dataclass(frozen=True)
class LossReport:
    l_ds: float
    l_pos: float
    l_total: float
    step: int
    epoch: int


# ---------------------------------------------------------------------------
# Losses


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else ag.constant(np.asarray(x, dtype=np.float64))


def ds_loss(lm_logits, target_ids, ignore_id: int = IGNORE_ID) -> Tensor:
    """Teacher-forced summary loss: mean NLL over non-ignored target slots."""
    logits = _as_tensor(lm_logits)
    targets = np.asarray(target_ids)
    if logits.value.shape[:-1] != targets.shape:
        raise ValueError(
            f"logit positions {logits.value.shape[:-1]} do not match targets {targets.shape}"
        )
    flat = ag.reshape(logits, (-1, logits.value.shape[-1]))
    return ag.cross_entropy(flat, targets.reshape(-1), ignore_id)


def pos_loss(pos_logits, label_ids, ignore_id: int = IGNORE_ID) -> Tensor:
    """Tagging loss: mean NLL over positions whose label is not IGNORE."""
    logits = _as_tensor(pos_logits)
    labels = np.asarray(label_ids)
    if logits.value.shape[:-1] != labels.shape:
        raise ValueError(
            f"logit positions {logits.value.shape[:-1]} do not match labels {labels.shape}"
        )
    flat = ag.reshape(logits, (-1, logits.value.shape[-1]))
    return ag.cross_entropy(flat, labels.reshape(-1), ignore_id)


def combined_loss(l_pos, l_ds, lam: float):
    """lam * l_pos + (1 - lam) * l_ds; accepts floats or graph tensors."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lam must be in [0, 1], got {lam}")
    if isinstance(l_pos, Tensor) or isinstance(l_ds, Tensor):
        return ag.add(ag.scale(_as_tensor(l_pos), lam), ag.scale(_as_tensor(l_ds), 1.0 - lam))
    return lam * l_pos + (1.0 - lam) * l_ds


# ---------------------------------------------------------------------------
# Adam


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


def adam_step(
    values: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    config: TrainConfig,
) -> None:
    """One bias-corrected Adam update, applied in place."""
    if set(values) != set(grads):
        raise ValueError("parameter and gradient name sets differ")
    if not state.m:
        state.m = {n: np.zeros_like(v) for n, v in values.items()}
        state.v = {n: np.zeros_like(v) for n, v in values.items()}
    b1, b2, eps = config.adam_beta1, config.adam_beta2, config.adam_eps
    state.t += 1
    t = state.t
    for name, value in values.items():
        g = grads[name]
        if g.shape != value.shape:
            raise ValueError(f"gradient shape mismatch for {name}")
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        value -= config.learning_rate * m_hat / (np.sqrt(v_hat) + eps)


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients so their global L2 norm is at most max_norm."""
    total = math.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if max_norm > 0 and total > max_norm:
        factor = max_norm / total
        for g in grads.values():
            g *= factor
    return total


# ---------------------------------------------------------------------------
# Data plumbing


@dataclass
class Example:
    dialogue_id: str
    enc_ids: list[int]
    labels: list[int]
    target: list[int]   # summary ids + EOS


def prepare_examples(
    corpus: Corpus,
    vocab: Vocabulary,
    strategy: SelectionStrategy,
    model_config: ModelConfig,
) -> list[Example]:
    examples = []
    max_target = model_config.max_len - 1
    for d in corpus:
        if d.summary_tokens is None:
            raise ValueError(f"dialogue {d.id!r}: summary not tokenized")
        enc = build_input(d, select_turns(d, strategy), vocab, max_len=model_config.max_len)
        target = vocab.encode(d.summary_tokens)[:max_target] + [vocab.eos_id]
        examples.append(
            Example(dialogue_id=d.id, enc_ids=enc.token_ids, labels=enc.label_ids, target=target)
        )
    return examples


def make_batch(examples: list[Example], vocab: Vocabulary) -> Batch:
    n = len(examples)
    s = max(len(e.enc_ids) for e in examples)
    t = max(len(e.target) for e in examples)
    enc_ids = np.full((n, s), vocab.pad_id, dtype=np.int64)
    enc_mask = np.zeros((n, s), dtype=bool)
    labels = np.full((n, s), IGNORE_ID, dtype=np.int64)
    dec_in = np.full((n, t), vocab.pad_id, dtype=np.int64)
    targets = np.full((n, t), IGNORE_ID, dtype=np.int64)
    for i, e in enumerate(examples):
        k = len(e.enc_ids)
        enc_ids[i, :k] = e.enc_ids
        enc_mask[i, :k] = True
        labels[i, :k] = e.labels
        m = len(e.target)
        dec_in[i, 0] = vocab.bos_id
        dec_in[i, 1:m] = e.target[: m - 1]
        targets[i, :m] = e.target
    return Batch(enc_ids=enc_ids, enc_mask=enc_mask, labels=labels, dec_in=dec_in, targets=targets)


def bucket_batches(examples: list[Example], batch_size: int) -> list[list[Example]]:
    """Group examples of similar encoder length into fixed batches."""
    by_len = sorted(examples, key=lambda e: (len(e.enc_ids), e.dialogue_id))
    return [by_len[i : i + batch_size] for i in range(0, len(by_len), batch_size)]


# ---------------------------------------------------------------------------
# Training loop


@dataclass
class TrainResult:
    model: Seq2SeqModel
    best_epoch: int
    dev_rouge1_trace: list[float]
    reports: list[LossReport]
    epoch_summaries: list[dict]


def _dev_rouge1(model, dev_examples, dev_references, vocab, beam_size, max_new) -> float:
    pairs = []
    for e, ref in zip(dev_examples, dev_references):
        result = beam_search(model, e.enc_ids, beam_size, vocab.bos_id, vocab.eos_id, max_new)
        cand = normalize_text(detokenize(vocab.decode(result.tokens)))
        pairs.append((cand, ref))
    return corpus_rouge(pairs)["rouge1"].f1


def train(
    train_corpus: Corpus,
    dev_corpus: Corpus,
    vocab: Vocabulary,
    model_config: ModelConfig,
    train_config: TrainConfig,
    strategy: SelectionStrategy,
    log_path=None,
) -> TrainResult:
    """Run the joint training loop and keep the best-dev-ROUGE parameters."""
    model = Seq2SeqModel(model_config)
    train_examples = prepare_examples(train_corpus, vocab, strategy, model_config)
    dev_examples = prepare_examples(dev_corpus, vocab, strategy, model_config)
    dev_references = [reference_tokens(d) for d in dev_corpus]
    max_new = min(model_config.max_len - 1, 4 + 2 * max(len(d.summary_tokens) for d in dev_corpus))

    state = AdamState()
    reports: list[LossReport] = []
    epoch_summaries: list[dict] = []
    dev_trace: list[float] = []
    best_f1 = -1.0
    best_epoch = -1
    best_values = model.params.clone_values()
    evals_since_best = 0
    step = 0
    log_fh = open(log_path, "w", encoding="utf-8") if log_path else None
    try:
        batches = bucket_batches(train_examples, train_config.batch_size)
        for epoch in range(train_config.epochs):
            order_rng = np.random.default_rng([train_config.seed, epoch, 0xB])
            drop_rng = np.random.default_rng([train_config.seed, epoch, 0xD])
            for bi in order_rng.permutation(len(batches)):
                batch = make_batch(batches[bi], vocab)
                model.params.zero_grads()
                lm_logits, pos_logits = model.forward_multitask(batch, drop_rng)
                l_ds = ds_loss(lm_logits, batch.targets)
                l_pos = pos_loss(pos_logits, batch.labels)
                total = combined_loss(l_pos, l_ds, train_config.lam)
                if not np.isfinite(total.value):
                    raise TrainingDivergedError(
                        f"non-finite loss at step {step} (epoch {epoch})"
                    )
                ag.backward(total)
                grads = model.params.grads()
                clip_gradients(grads, train_config.clip_norm)
                adam_step(model.params.values(), grads, state, train_config)
                report = LossReport(
                    l_ds=float(l_ds.value),
                    l_pos=float(l_pos.value),
                    l_total=float(total.value),
                    step=step,
                    epoch=epoch,
                )
                reports.append(report)
                if log_fh:
                    log_fh.write(json.dumps({"type": "step", **report.__dict__}) + "\n")
                step += 1
            last_epoch = epoch == train_config.epochs - 1
            if epoch % train_config.eval_every == 0 or last_epoch:
                f1 = _dev_rouge1(
                    model, dev_examples, dev_references, vocab, train_config.beam_size, max_new
                )
                dev_trace.append(f1)
                epoch_summaries.append({"type": "epoch", "epoch": epoch, "dev_rouge1_f1": f1})
                if log_fh:
                    log_fh.write(json.dumps(epoch_summaries[-1]) + "\n")
                if f1 > best_f1:
                    best_f1 = f1
                    best_epoch = epoch
                    best_values = model.params.clone_values()
                    evals_since_best = 0
                else:
                    evals_since_best += 1
                    if evals_since_best > train_config.patience:
                        break
    finally:
        if log_fh:
            log_fh.close()
    model.params.load_values(best_values)
    return TrainResult(
        model=model,
        best_epoch=best_epoch,
        dev_rouge1_trace=dev_trace,
        reports=reports,
        epoch_summaries=epoch_summaries,
    )
