"""Command-line entry point: stats, preprocess, train, generate, evaluate,
analyze-styles.

Configuration resolves in three layers: built-in defaults, then a JSON config
file (--config, which may also be a manifest written by an earlier run), then
explicit flags. Every command that writes files also writes a manifest.json
recording the resolved config, the seed, and sha256 checksums of inputs and
outputs; re-running a command with the same manifest inputs reproduces the
outputs byte for byte.

Exit codes: 0 success, 2 bad arguments, 3 data errors, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import styles as styles_mod
from .corpus import load_corpus, save_corpus
from .decoding import avg_generated_words, beam_search, greedy_decode
from .errors import DataError, DialsumError, TrainingDivergedError
from .model import ModelConfig, Seq2SeqModel, load_checkpoint, save_checkpoint
from .rouge import RougeScore, corpus_rouge, normalize_text, reference_tokens
from .selection import SelectionStrategy
from .tokenizer import LexiconRuleTagger, TAGS, Vocabulary, build_vocab, detokenize, preprocess_corpus
from .trainer import TrainConfig, prepare_examples, train

CONFIG_DEFAULTS = {
    "lambda": 0.1,
    "lr": 3e-4,
    "epochs": 20,
    "batch_size": 8,
    "beam": 4,
    "patience": 5,
    "seed": 0,
    "input_type": "full",
    "n": 10,
    "max_len": 256,
    "min_freq": 1,
    "eval_every": 1,
}


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir: Path, command: str, config: dict, inputs: dict, outputs: dict) -> Path:
    manifest = {
        "command": command,
        "config": config,
        "seed": config.get("seed"),
        "inputs": {k: {"path": str(p), "sha256": _sha256(p)} for k, p in inputs.items()},
        "outputs": {k: {"path": str(p), "sha256": _sha256(p)} for k, p in outputs.items()},
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def resolve_config(args) -> dict:
    config = dict(CONFIG_DEFAULTS)
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read config {args.config}: {exc}") from exc
        if "config" in loaded and isinstance(loaded["config"], dict):
            loaded = loaded["config"]  # a manifest from an earlier run
        unknown = set(loaded) - set(CONFIG_DEFAULTS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        config.update(loaded)
    overrides = {
        "lambda": getattr(args, "lam", None),
        "lr": getattr(args, "lr", None),
        "epochs": getattr(args, "epochs", None),
        "batch_size": getattr(args, "batch_size", None),
        "beam": getattr(args, "beam", None),
        "patience": getattr(args, "patience", None),
        "seed": getattr(args, "seed", None),
        "input_type": getattr(args, "input_type", None),
        "n": getattr(args, "n", None),
        "max_len": getattr(args, "max_len", None),
        "min_freq": getattr(args, "min_freq", None),
        "eval_every": getattr(args, "eval_every", None),
    }
    config.update({k: v for k, v in overrides.items() if v is not None})
    return config


def _strategy(config: dict) -> SelectionStrategy:
    return SelectionStrategy.parse(config["input_type"], config["n"])


def _load_tagged(path: str, format: str, split: str | None):
    """Load a corpus for model consumption, tagging raw chat on the fly."""
    loaded = load_corpus(path, format=format, split=split)
    if format == corpus_mod.RAW_CHAT:
        loaded = preprocess_corpus(loaded, LexiconRuleTagger())
    else:
        for d in loaded:
            for i, t in enumerate(d.turns):
                if t.pos_tags is None:
                    raise DataError(
                        f"dialogue {d.id!r} turn {i} has no tags; run `dialsum preprocess`"
                    )
    return loaded


# ---------------------------------------------------------------------------
# Commands


def cmd_stats(args) -> int:
    stats_list = []
    corpora = []
    for path in args.paths:
        c = load_corpus(path, format=args.format)
        corpora.append((path, c))
        stats_list.append(corpus_mod.compute_stats(c))
    print(corpus_mod.format_stats_table(stats_list))
    if args.density_bin:
        for (path, c), s in zip(corpora, stats_list):
            hist = corpus_mod.utterance_density(c, args.density_bin)
            pretty = ", ".join(f"{lo}-{lo + args.density_bin - 1}: {n}" for lo, n in hist.items())
            print(f"turn-count density [{s.split}] {pretty}")
    if args.csv:
        Path(args.csv).write_text(corpus_mod.stats_csv(stats_list), encoding="utf-8")
        out_dir = Path(args.csv).parent
        config = {"seed": None, "format": args.format}
        write_manifest(
            out_dir,
            "stats",
            config,
            {f"corpus_{i}": p for i, (p, _) in enumerate(corpora)},
            {"csv": args.csv},
        )
    return 0


def cmd_preprocess(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    loaded = load_corpus(args.corpus, format=args.format, split=args.split)
    if args.tagger != "rule":
        raise ValueError(f"unknown tagger {args.tagger!r}")
    processed = preprocess_corpus(loaded, LexiconRuleTagger())
    out_path = out_dir / f"{processed.split}.annotated.jsonl"
    save_corpus(processed, out_path, format=corpus_mod.ANNOTATED)
    write_manifest(
        out_dir,
        "preprocess",
        {"seed": None, "format": args.format, "tagger": args.tagger, "split": processed.split},
        {"corpus": args.corpus},
        {"annotated": out_path},
    )
    print(f"wrote {out_path} ({len(processed)} dialogues)")
    return 0


def cmd_train(args) -> int:
    config = resolve_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_corpus = _load_tagged(args.train, args.format, "train")
    dev_corpus = _load_tagged(args.dev, args.format, "dev")
    vocab = build_vocab(train_corpus, min_freq=config["min_freq"])
    model_config = ModelConfig(
        vocab_size=len(vocab), max_len=config["max_len"], seed=config["seed"]
    )
    train_config = TrainConfig(
        lam=config["lambda"],
        learning_rate=config["lr"],
        epochs=config["epochs"],
        batch_size=config["batch_size"],
        beam_size=config["beam"],
        patience=config["patience"],
        seed=config["seed"],
        eval_every=config["eval_every"],
    )
    log_path = out_dir / "train_log.jsonl"
    result = train(
        train_corpus,
        dev_corpus,
        vocab,
        model_config,
        train_config,
        _strategy(config),
        log_path=log_path,
    )
    ckpt_path = out_dir / "checkpoint.bin"
    vocab_path = out_dir / "vocab.txt"
    save_checkpoint(ckpt_path, result.model, seed=config["seed"], step=len(result.reports))
    vocab.save(vocab_path)
    write_manifest(
        out_dir,
        "train",
        config,
        {"train": args.train, "dev": args.dev},
        {"checkpoint": ckpt_path, "vocab": vocab_path, "log": log_path},
    )
    last = result.reports[-1]
    print(
        f"trained {len(result.reports)} steps; best dev ROUGE-1 F1 "
        f"{max(result.dev_rouge1_trace):.4f} at epoch {result.best_epoch}; "
        f"final l_ds {last.l_ds:.4f} l_pos {last.l_pos:.4f}"
    )
    return 0


def _load_model_dir(model_dir: Path):
    model, seed, step = load_checkpoint(model_dir / "checkpoint.bin")
    vocab = Vocabulary.load(model_dir / "vocab.txt")
    manifest = {}
    manifest_path = model_dir / "manifest.json"
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8")).get("config", {})
    return model, vocab, manifest


def cmd_generate(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_dir = Path(args.model)
    model, vocab, train_manifest = _load_model_dir(model_dir)
    config = resolve_config(args)
    for key in ("input_type", "n", "max_len"):
        if getattr(args, key) is None and key in train_manifest:
            config[key] = train_manifest[key]
    if args.beam is None and "beam" in train_manifest:
        config["beam"] = train_manifest["beam"]
    loaded = _load_tagged(args.corpus, args.format, None)
    examples = prepare_examples(loaded, vocab, _strategy(config), model.config)
    max_new = args.max_new or min(model.config.max_len - 1, 64)
    records = []
    for example in examples:
        if config["beam"] == 1:
            result = greedy_decode(model, example.enc_ids, vocab.bos_id, vocab.eos_id, max_new)
        else:
            result = beam_search(
                model, example.enc_ids, config["beam"], vocab.bos_id, vocab.eos_id, max_new
            )
        summary = detokenize(vocab.decode(result.tokens))
        records.append(
            {
                "id": example.dialogue_id,
                "summary": summary,
                "logprob": result.logprob,
                "n_words": len(summary.split()),
            }
        )
    out_path = out_dir / "summaries.jsonl"
    out_path.write_text(
        "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records), encoding="utf-8"
    )
    write_manifest(
        out_dir,
        "generate",
        config,
        {"corpus": args.corpus, "checkpoint": model_dir / "checkpoint.bin"},
        {"summaries": out_path},
    )
    mean_words = avg_generated_words([r["summary"].split() for r in records])
    print(f"wrote {out_path} ({len(records)} summaries, avg {mean_words:.2f} words)")
    return 0


EVAL_COLUMNS = ["R1-F", "R1-P", "R1-R", "R2-F", "R2-P", "R2-R", "RL-F", "RL-P", "RL-R"]


def _eval_row(scores: dict[str, RougeScore]) -> list[float]:
    row = []
    for key in ("rouge1", "rouge2", "rougeL"):
        s = scores[key]
        row.extend([s.f1, s.precision, s.recall])
    return row


def cmd_evaluate(args) -> int:
    references = load_corpus(args.references, format=args.format)
    ref_by_id = {d.id: reference_tokens(d) for d in references}
    table: list[tuple[str, list[float], float]] = []
    inputs = {"references": args.references}
    for spec_item in args.systems:
        if "=" in spec_item:
            name, path = spec_item.split("=", 1)
        else:
            name, path = Path(spec_item).stem, spec_item
        pairs = []
        n_words = []
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    rec_id, summary = rec["id"], rec["summary"]
                except (json.JSONDecodeError, KeyError) as exc:
                    raise DataError(f"{path}: line {line_no}: bad record ({exc})") from exc
                if rec_id not in ref_by_id:
                    raise DataError(f"{path}: no reference for dialogue id {rec_id!r}")
                pairs.append((normalize_text(summary), ref_by_id[rec_id]))
                n_words.append(len(summary.split()))
        if not pairs:
            raise DataError(f"{path}: no summaries")
        scores = corpus_rouge(pairs)
        table.append((name, _eval_row(scores), sum(n_words) / len(n_words)))
        inputs[f"system_{name}"] = path
    name_w = max(len("system"), max(len(n) for n, _, _ in table))
    print(f"{'system':<{name_w}} " + " ".join(f"{c:>6}" for c in EVAL_COLUMNS) + "  avg_words")
    for name, row, words in table:
        print(f"{name:<{name_w}} " + " ".join(f"{v:6.3f}" for v in row) + f"  {words:9.2f}")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["system"] + EVAL_COLUMNS + ["avg_words"])
            for name, row, words in table:
                writer.writerow([name] + [f"{v:.6f}" for v in row] + [f"{words:.2f}"])
        write_manifest(
            Path(args.csv).parent, "evaluate", {"seed": None}, inputs, {"csv": args.csv}
        )
    return 0


def cmd_analyze_styles(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    loaded = _load_tagged(args.corpus, args.format, None)
    docs = styles_mod.build_styles(loaded)
    matrix = styles_mod.tfidf(docs)
    assignment = styles_mod.kmeans(matrix, args.k, seed=args.seed or 0)
    projection = styles_mod.pca_2d(matrix)
    ranking = styles_mod.rank_features_by_std(assignment, matrix)

    def write_csv(name, header, rows):
        path = out_dir / name
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        return path

    outputs = {
        "styles": write_csv(
            "styles.csv",
            ["speaker", "total"] + list(TAGS),
            styles_mod.style_counts_table(docs),
        ),
        "tfidf": write_csv(
            "tfidf.csv",
            ["speaker"] + list(TAGS),
            [
                [matrix.speakers[i]] + [f"{w:.6f}" for w in matrix.weights[i]]
                for i in range(len(matrix.speakers))
            ],
        ),
        "clusters": write_csv(
            "clusters.csv",
            ["speaker", "cluster"],
            [[s, int(c)] for s, c in zip(matrix.speakers, assignment.labels)],
        ),
        "pca": write_csv(
            "pca.csv",
            ["speaker", "x", "y"],
            [
                [matrix.speakers[i], f"{projection.coords[i, 0]:.6f}", f"{projection.coords[i, 1]:.6f}"]
                for i in range(len(matrix.speakers))
            ],
        ),
        "feature_rank": write_csv(
            "feature_rank.csv",
            ["tag"] + [f"cluster_{c}_mean" for c in range(args.k)] + ["std"],
            [
                [r.tag] + [f"{m:.6f}" for m in r.cluster_means] + [f"{r.std:.6f}"]
                for r in ranking
            ],
        ),
    }
    write_manifest(
        out_dir,
        "analyze-styles",
        {"seed": args.seed or 0, "k": args.k, "format": args.format},
        {"corpus": args.corpus},
        outputs,
    )
    print(
        f"analyzed {len(docs)} speaker styles; "
        f"PCA explained variance {projection.explained_variance[0]:.3f}/"
        f"{projection.explained_variance[1]:.3f}; top tags "
        + ", ".join(r.tag for r in ranking[:6])
    )
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dialsum",
        description="Multi-task chat summarization: preprocessing, training, decoding, evaluation, style analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_config=True):
        if with_config:
            p.add_argument("--config", help="JSON config file (or a manifest.json from a previous run)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", help="output directory")

    p = sub.add_parser("stats", help="corpus statistics table (+ optional CSV)")
    p.add_argument("paths", nargs="+", help="corpus files, one per split")
    p.add_argument("--format", choices=corpus_mod.FORMATS, default=corpus_mod.RAW_CHAT)
    p.add_argument("--csv", help="also write the table as CSV")
    p.add_argument("--density-bin", type=int, default=None, help="print turn-count histogram with this bin width")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("preprocess", help="tokenize and POS-tag a raw chat corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=corpus_mod.FORMATS, default=corpus_mod.RAW_CHAT)
    p.add_argument("--tagger", default="rule", help="tagger to use (bundled: 'rule')")
    p.add_argument("--split", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="train the multi-task summarizer")
    add_common(p)
    p.add_argument("--train", required=True, help="training corpus file")
    p.add_argument("--dev", required=True, help="dev corpus file")
    p.add_argument("--format", choices=corpus_mod.FORMATS, default=corpus_mod.ANNOTATED)
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="tagging-task weight in [0,1]")
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--beam", type=int, default=None)
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--input-type", choices=["lead", "middle", "longest", "full"], default=None)
    p.add_argument("--n", type=int, default=None, help="utterances per dialogue for lead/middle/longest")
    p.add_argument("--max-len", type=int, default=None)
    p.add_argument("--min-freq", type=int, default=None)
    p.add_argument("--eval-every", type=int, default=None)
    p.set_defaults(func=cmd_train, out="run")

    p = sub.add_parser("generate", help="decode summaries with a trained model")
    add_common(p)
    p.add_argument("--model", required=True, help="training output directory")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=corpus_mod.FORMATS, default=corpus_mod.ANNOTATED)
    p.add_argument("--beam", type=int, default=None)
    p.add_argument("--input-type", choices=["lead", "middle", "longest", "full"], default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--max-len", type=int, default=None)
    p.add_argument("--max-new", type=int, default=None, help="maximum generated tokens")
    p.set_defaults(func=cmd_generate, out="generated")

    p = sub.add_parser("evaluate", help="score generated summaries against references")
    p.add_argument("systems", nargs="+", help="system outputs as name=summaries.jsonl")
    p.add_argument("--references", required=True, help="corpus file carrying reference summaries")
    p.add_argument("--format", choices=corpus_mod.FORMATS, default=corpus_mod.RAW_CHAT)
    p.add_argument("--csv", help="write scores as CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze-styles", help="speaker-style tf-idf / k-means / PCA reports")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=corpus_mod.FORMATS, default=corpus_mod.ANNOTATED)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze_styles)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, DialsumError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
