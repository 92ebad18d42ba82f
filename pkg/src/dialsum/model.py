"""Shared-encoder seq2seq transformer with a POS head and an LM head.

One bidirectional encoder serves two task heads: a per-position linear
classifier over the 25 POS tags on top of the encoder, and an autoregressive
decoder with cross-attention whose final linear layer projects to the
vocabulary. There is exactly one set of encoder parameters; both heads see
the same encoder forward pass.

Blocks are pre-layer-norm with learned positional embeddings. The token
embedding table is shared by the encoder and decoder inputs; the LM output
projection is a separate parameter.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .errors import CheckpointError
from .selection import EncodedInput
from .tokenizer import N_TAGS

_NEG_INF = -np.inf


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    d_model: int = 64
    n_enc_layers: int = 2
    n_dec_layers: int = 2
    n_heads: int = 4
    d_ff: int = 256
    dropout: float = 0.0
    max_len: int = 256
    n_tags: int = N_TAGS
    seed: int = 0

    def __post_init__(self):
        for name in ("vocab_size", "d_model", "n_enc_layers", "n_dec_layers", "n_heads", "d_ff", "max_len"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.d_model % self.n_heads != 0:
            raise ValueError("d_model must be divisible by n_heads")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.n_tags != N_TAGS:
            raise ValueError(f"n_tags must be {N_TAGS}")


_INIT_SCALE = 0.08


class ModelParameters:
    """Named parameter tensors with a fixed, seed-reproducible creation order."""

    def __init__(self, tensors: dict[str, Tensor]):
        self.tensors = tensors

    @classmethod
    def initialize(cls, config: ModelConfig) -> "ModelParameters":
        rng = np.random.default_rng(config.seed)
        tensors: dict[str, Tensor] = {}

        def uniform(name, *shape):
            tensors[name] = ag.param(rng.uniform(-_INIT_SCALE, _INIT_SCALE, size=shape))

        def zeros(name, *shape):
            tensors[name] = ag.param(np.zeros(shape))

        def ones(name, *shape):
            tensors[name] = ag.param(np.ones(shape))

        def attention(prefix, d):
            for part in ("wq", "wk", "wv", "wo"):
                uniform(f"{prefix}.{part}", d, d)
                zeros(f"{prefix}.b{part[1]}", d)

        d, ff = config.d_model, config.d_ff
        uniform("tok_emb", config.vocab_size, d)
        uniform("pos_emb", config.max_len, d)
        for i in range(config.n_enc_layers):
            ones(f"enc.{i}.ln1.g", d)
            zeros(f"enc.{i}.ln1.b", d)
            attention(f"enc.{i}.attn", d)
            ones(f"enc.{i}.ln2.g", d)
            zeros(f"enc.{i}.ln2.b", d)
            uniform(f"enc.{i}.ff.w1", d, ff)
            zeros(f"enc.{i}.ff.b1", ff)
            uniform(f"enc.{i}.ff.w2", ff, d)
            zeros(f"enc.{i}.ff.b2", d)
        ones("enc.ln_out.g", d)
        zeros("enc.ln_out.b", d)
        for i in range(config.n_dec_layers):
            ones(f"dec.{i}.ln1.g", d)
            zeros(f"dec.{i}.ln1.b", d)
            attention(f"dec.{i}.self", d)
            ones(f"dec.{i}.ln2.g", d)
            zeros(f"dec.{i}.ln2.b", d)
            attention(f"dec.{i}.cross", d)
            ones(f"dec.{i}.ln3.g", d)
            zeros(f"dec.{i}.ln3.b", d)
            uniform(f"dec.{i}.ff.w1", d, ff)
            zeros(f"dec.{i}.ff.b1", ff)
            uniform(f"dec.{i}.ff.w2", ff, d)
            zeros(f"dec.{i}.ff.b2", d)
        ones("dec.ln_out.g", d)
        zeros("dec.ln_out.b", d)
        uniform("pos_head.w", d, config.n_tags)
        zeros("pos_head.b", config.n_tags)
        uniform("lm_head.w", d, config.vocab_size)
        zeros("lm_head.b", config.vocab_size)
        return cls(tensors)

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self.tensors

    def names(self) -> list[str]:
        return list(self.tensors)

    def items(self):
        return self.tensors.items()

    def zero_grads(self) -> None:
        for t in self.tensors.values():
            t.grad = None

    def grads(self) -> dict[str, np.ndarray]:
        return {
            n: (t.grad if t.grad is not None else np.zeros_like(t.value))
            for n, t in self.tensors.items()
        }

    def values(self) -> dict[str, np.ndarray]:
        return {n: t.value for n, t in self.tensors.items()}

    def clone_values(self) -> dict[str, np.ndarray]:
        return {n: t.value.copy() for n, t in self.tensors.items()}

    def load_values(self, values: dict[str, np.ndarray]) -> None:
        if set(values) != set(self.tensors):
            raise ValueError("parameter name sets differ")
        for n, v in values.items():
            if v.shape != self.tensors[n].value.shape:
                raise ValueError(f"shape mismatch for {n}")
            self.tensors[n].value[...] = v


@dataclass
class EncoderOutput:
    hidden: Tensor          # (B, S, d_model)
    mask: np.ndarray        # (B, S) bool, True on real positions

    @property
    def hidden_states(self) -> np.ndarray:
        h = self.hidden.value
        return h[0] if h.shape[0] == 1 else h


@dataclass
class Batch:
    """Padded id arrays for one training step. -1 marks ignored label/target slots."""

    enc_ids: np.ndarray     # (B, S) int
    enc_mask: np.ndarray    # (B, S) bool
    labels: np.ndarray      # (B, S) int, tag ids or -1
    dec_in: np.ndarray      # (B, T) int, BOS + shifted summary
    targets: np.ndarray     # (B, T) int, summary + EOS, -1 at padding


def _as_ids(enc_input) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(enc_input, EncodedInput):
        ids = np.asarray(enc_input.token_ids, dtype=np.int64)
    else:
        ids = np.asarray(enc_input, dtype=np.int64)
    return ids.reshape(1, -1), np.ones((1, ids.size), dtype=bool)


class Seq2SeqModel:
    def __init__(self, config: ModelConfig, params: ModelParameters | None = None):
        self.config = config
        self.params = params if params is not None else ModelParameters.initialize(config)
        # Instrumentation: number of examples pushed through the encoder.
        self.encoder_examples = 0

    # -- building blocks ----------------------------------------------------

    def _linear(self, x: Tensor, w_name: str, b_name: str) -> Tensor:
        return ag.add(ag.matmul(x, self.params[w_name]), self.params[b_name])

    def _ln(self, x: Tensor, prefix: str) -> Tensor:
        return ag.layer_norm(x, self.params[f"{prefix}.g"], self.params[f"{prefix}.b"])

    def _split_heads(self, x: Tensor, batch: int, length: int) -> Tensor:
        h = self.config.n_heads
        dh = self.config.d_model // h
        return ag.transpose(ag.reshape(x, (batch, length, h, dh)), (0, 2, 1, 3))

    def _attention(self, q_in: Tensor, kv_in: Tensor, prefix: str, mask_add, rng) -> Tensor:
        b, t, d = q_in.value.shape
        s = kv_in.value.shape[1]
        q = self._split_heads(self._linear(q_in, f"{prefix}.wq", f"{prefix}.bq"), b, t)
        k = self._split_heads(self._linear(kv_in, f"{prefix}.wk", f"{prefix}.bk"), kv_in.value.shape[0], s)
        v = self._split_heads(self._linear(kv_in, f"{prefix}.wv", f"{prefix}.bv"), kv_in.value.shape[0], s)
        dh = d // self.config.n_heads
        scores = ag.scale(ag.matmul(q, ag.transpose(k, (0, 1, 3, 2))), 1.0 / np.sqrt(dh))
        weights = ag.masked_softmax(scores, mask_add)
        ctx = ag.matmul(weights, v)
        merged = ag.reshape(ag.transpose(ctx, (0, 2, 1, 3)), (b, t, d))
        out = self._linear(merged, f"{prefix}.wo", f"{prefix}.bo")
        if rng is not None:
            out = ag.dropout(out, self.config.dropout, rng)
        return out

    def _ff(self, x: Tensor, prefix: str, rng) -> Tensor:
        hidden = ag.gelu(self._linear(x, f"{prefix}.w1", f"{prefix}.b1"))
        out = ag.add(ag.matmul(hidden, self.params[f"{prefix}.w2"]), self.params[f"{prefix}.b2"])
        if rng is not None:
            out = ag.dropout(out, self.config.dropout, rng)
        return out

    def _embed(self, ids: np.ndarray) -> Tensor:
        tok = ag.embedding(self.params["tok_emb"], ids)
        pos = ag.embedding(self.params["pos_emb"], np.arange(ids.shape[1]))
        return ag.add(tok, pos)

    def _encoder_forward(self, enc_ids: np.ndarray, enc_mask: np.ndarray, rng=None) -> Tensor:
        self.encoder_examples += enc_ids.shape[0]
        key_add = np.where(enc_mask, 0.0, _NEG_INF)[:, None, None, :]
        x = self._embed(enc_ids)
        for i in range(self.config.n_enc_layers):
            normed = self._ln(x, f"enc.{i}.ln1")
            x = ag.add(x, self._attention(normed, normed, f"enc.{i}.attn", key_add, rng))
            x = ag.add(x, self._ff(self._ln(x, f"enc.{i}.ln2"), f"enc.{i}.ff", rng))
        return self._ln(x, "enc.ln_out")

    def _decoder_forward(self, dec_ids: np.ndarray, enc_hidden: Tensor, enc_mask: np.ndarray, rng=None) -> Tensor:
        t = dec_ids.shape[1]
        causal = np.where(np.tril(np.ones((t, t), dtype=bool)), 0.0, _NEG_INF)[None, None, :, :]
        cross_add = np.where(enc_mask, 0.0, _NEG_INF)[:, None, None, :]
        x = self._embed(dec_ids)
        for i in range(self.config.n_dec_layers):
            normed = self._ln(x, f"dec.{i}.ln1")
            x = ag.add(x, self._attention(normed, normed, f"dec.{i}.self", causal, rng))
            x = ag.add(
                x,
                self._attention(self._ln(x, f"dec.{i}.ln2"), enc_hidden, f"dec.{i}.cross", cross_add, rng),
            )
            x = ag.add(x, self._ff(self._ln(x, f"dec.{i}.ln3"), f"dec.{i}.ff", rng))
        return self._ln(x, "dec.ln_out")

    def _validate_ids(self, ids: np.ndarray, what: str) -> None:
        if ids.size and (ids.min() < 0 or ids.max() >= self.config.vocab_size):
            raise ValueError(f"{what} ids must lie in [0, {self.config.vocab_size})")
        if ids.shape[-1] > self.config.max_len:
            raise ValueError(
                f"{what} length {ids.shape[-1]} exceeds max_len {self.config.max_len}"
            )
        if ids.shape[-1] == 0:
            raise ValueError(f"{what} is empty")

    # -- task-facing operations ---------------------------------------------

    def encode(self, enc_input) -> EncoderOutput:
        """Run the bidirectional encoder over one input sequence."""
        ids, mask = _as_ids(enc_input)
        self._validate_ids(ids, "encoder input")
        hidden = self._encoder_forward(ids, mask)
        return EncoderOutput(hidden=hidden, mask=mask)

    def pos_logits(self, enc_hidden: Tensor) -> Tensor:
        return self._linear(enc_hidden, "pos_head.w", "pos_head.b")

    def pos_head(self, enc_out: EncoderOutput) -> np.ndarray:
        """Per-position tag distributions (each row sums to 1)."""
        probs = ag.masked_softmax(self.pos_logits(enc_out.hidden)).value
        return probs[0] if probs.shape[0] == 1 else probs

    def lm_logits(self, dec_hidden: Tensor) -> Tensor:
        return self._linear(dec_hidden, "lm_head.w", "lm_head.b")

    def decode_step(self, prefix_ids, enc_out: EncoderOutput) -> np.ndarray:
        """Distribution over the vocabulary for the position after `prefix_ids`."""
        ids = np.asarray(list(prefix_ids), dtype=np.int64).reshape(1, -1)
        self._validate_ids(ids, "decoder prefix")
        hidden = self._decoder_forward(ids, enc_out.hidden, enc_out.mask)
        logits = self.lm_logits(hidden).value[0, -1]
        m = logits.max()
        e = np.exp(logits - m)
        return e / e.sum()

    def next_logprobs(self, prefixes: list[list[int]], enc_out: EncoderOutput) -> np.ndarray:
        """Batched next-token log-probabilities for same-length prefixes."""
        ids = np.asarray(prefixes, dtype=np.int64)
        self._validate_ids(ids, "decoder prefix")
        hidden = self._decoder_forward(ids, enc_out.hidden, enc_out.mask)
        logits = self.lm_logits(hidden).value[:, -1, :]
        m = logits.max(-1, keepdims=True)
        lse = m + np.log(np.exp(logits - m).sum(-1, keepdims=True))
        return logits - lse

    def forward_multitask(self, batch: Batch, train_rng=None) -> tuple[Tensor, Tensor]:
        """(LM logits, POS logits) off a single shared encoder evaluation."""
        if batch.enc_ids.shape != batch.enc_mask.shape or batch.enc_ids.shape != batch.labels.shape:
            raise ValueError("encoder arrays of the batch disagree in shape")
        if batch.dec_in.shape != batch.targets.shape:
            raise ValueError("decoder arrays of the batch disagree in shape")
        self._validate_ids(batch.enc_ids, "encoder input")
        self._validate_ids(batch.dec_in, "decoder input")
        rng = train_rng if self.config.dropout > 0.0 else None
        enc_hidden = self._encoder_forward(batch.enc_ids, batch.enc_mask, rng)
        pos_logits = self.pos_logits(enc_hidden)
        dec_hidden = self._decoder_forward(batch.dec_in, enc_hidden, batch.enc_mask, rng)
        lm_logits = self.lm_logits(dec_hidden)
        return lm_logits, pos_logits


# ---------------------------------------------------------------------------
# Checkpoints: magic, little-endian header length, JSON header, raw float64
# buffers in header order. No timestamps, so identical runs write identical
# bytes.

_MAGIC = b"DSUMCKP1"


def save_checkpoint(path, model: Seq2SeqModel, seed: int, step: int) -> None:
    names = model.params.names()
    header = {
        "config": asdict(model.config),
        "seed": seed,
        "step": step,
        "tensors": [{"name": n, "shape": list(model.params[n].value.shape)} for n in names],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(len(blob).to_bytes(8, "little"))
        fh.write(blob)
        for n in names:
            fh.write(np.ascontiguousarray(model.params[n].value, dtype="<f8").tobytes())
    os.replace(tmp, path)


def load_checkpoint(path, expected_config: ModelConfig | None = None):
    """Read a checkpoint; returns (model, seed, step).

    Raises CheckpointError on corrupt files or when `expected_config` does
    not match the stored one.
    """
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint file")
        size = int.from_bytes(fh.read(8), "little")
        try:
            header = json.loads(fh.read(size).decode("utf-8"))
            config = ModelConfig(**header["config"])
        except (ValueError, KeyError, TypeError) as exc:
            raise CheckpointError(f"{path}: corrupt header ({exc})") from exc
        if expected_config is not None and config != expected_config:
            raise CheckpointError(f"{path}: checkpoint config does not match expected config")
        model = Seq2SeqModel(config)
        for entry in header["tensors"]:
            name, shape = entry["name"], tuple(entry["shape"])
            if name not in model.params:
                raise CheckpointError(f"{path}: unexpected tensor {name!r}")
            want = model.params[name].value.shape
            if shape != want:
                raise CheckpointError(f"{path}: tensor {name!r} has shape {shape}, expected {want}")
            n_bytes = int(np.prod(shape)) * 8 if shape else 8
            buf = fh.read(n_bytes)
            if len(buf) != n_bytes:
                raise CheckpointError(f"{path}: truncated tensor data for {name!r}")
            model.params[name].value[...] = np.frombuffer(buf, dtype="<f8").reshape(shape)
    return model, header["seed"], header["step"]
