"""Multi-task abstractive chat summarization at desk scale.

A word-level encoder-decoder transformer trained from scratch, where the
bidirectional encoder is shared between summary generation and an auxiliary
POS sequence-labeling head. Includes emoticon-aware chat tokenization and
rule tagging, utterance-selection strategies, beam-search decoding, ROUGE
evaluation, and speaker-style tf-idf / k-means / PCA analysis.
"""

__version__ = "0.1.0"

from .corpus import Corpus, CorpusStats, Dialogue, Speaker, Utterance, compute_stats, load_corpus, save_corpus, utterance_density
from .decoding import avg_generated_words, beam_search, greedy_decode
from .model import ModelConfig, ModelParameters, Seq2SeqModel, load_checkpoint, save_checkpoint
from .rouge import RougeScore, corpus_rouge, rouge_l, rouge_n
from .selection import EncodedInput, SelectionStrategy, build_input, select
from .styles import build_styles, kmeans, pca_2d, rank_features_by_std, tfidf
from .tokenizer import LexiconRuleTagger, TaggedUtterance, Vocabulary, build_vocab, import_tags, preprocess_corpus, tag, tokenize
from .trainer import TrainConfig, adam_step, combined_loss, ds_loss, pos_loss, train

__all__ = [
    "Corpus", "CorpusStats", "Dialogue", "Speaker", "Utterance",
    "compute_stats", "load_corpus", "save_corpus", "utterance_density",
    "tokenize", "tag", "LexiconRuleTagger", "TaggedUtterance", "Vocabulary",
    "build_vocab", "import_tags", "preprocess_corpus",
    "SelectionStrategy", "EncodedInput", "select", "build_input",
    "ModelConfig", "ModelParameters", "Seq2SeqModel", "save_checkpoint", "load_checkpoint",
    "TrainConfig", "ds_loss", "pos_loss", "combined_loss", "adam_step", "train",
    "greedy_decode", "beam_search", "avg_generated_words",
    "RougeScore", "rouge_n", "rouge_l", "corpus_rouge",
    "build_styles", "tfidf", "kmeans", "pca_2d", "rank_features_by_std",
    "__version__",
]
