"""Access to the bundled toy chat corpus (8 train / 2 dev / 2 test dialogues)."""

from importlib import resources

from ..corpus import Corpus, load_corpus


def toy_corpus_path(split: str):
    return resources.files("dialsum").joinpath(f"data/toy/{split}.json")


def load_toy_corpus(split: str = "train") -> Corpus:
    return load_corpus(str(toy_corpus_path(split)), format="raw-chat", split=split)
