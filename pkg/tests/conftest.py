import pytest

from dialsum.data import load_toy_corpus
from dialsum.tokenizer import LexiconRuleTagger, build_vocab, preprocess_corpus


@pytest.fixture(scope="session")
def tagger():
    return LexiconRuleTagger()


@pytest.fixture(scope="session")
def toy_raw():
    return {split: load_toy_corpus(split) for split in ("train", "dev", "test")}


@pytest.fixture(scope="session")
def toy_tagged(tagger):
    return {
        split: preprocess_corpus(load_toy_corpus(split), tagger)
        for split in ("train", "dev", "test")
    }


@pytest.fixture(scope="session")
def toy_vocab(toy_tagged):
    return build_vocab(toy_tagged["train"], min_freq=1)
