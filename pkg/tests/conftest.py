""" Shared fixtures: small seeded models, datasets and dictionaries. """
import numpy as np
import pytest

from advseq.sdk.linalg import Rng
from advseq.sdk.resources.base_models import SeqPairConfig
from advseq.sdk.resources.data import (EmbeddingDictionary,
                                       generate_correlated_pairs,
                                       generate_synthetic_corpus)
from advseq.sdk.resources.models import LstmClassifierParams, VanillaRnnParams


def make_vanilla(seed: int = 0, input_dim: int = 3, hidden_dim: int = 4, output_dim: int = 2,
                 activation: str = "tanh") -> VanillaRnnParams:
    return VanillaRnnParams.initialize(Rng(seed), input_dim, hidden_dim, output_dim, init_scale=0.5,
                                       activation=activation)


def make_classifier(seed: int = 0, vocab_size: int = 12, embed_dim: int = 3, hidden_dim: int = 4) -> LstmClassifierParams:
    return LstmClassifierParams.initialize(Rng(seed), vocab_size, embed_dim, hidden_dim, init_scale=0.5)


def linear_model(input_dim: int, w) -> VanillaRnnParams:
    """ Identity-activation RNN with w_in = w_out = I and the given recurrence. """
    return VanillaRnnParams(
        w_in=np.eye(input_dim),
        w=np.asarray(w, dtype=float),
        w_out=np.eye(input_dim),
        b_h=np.zeros(input_dim),
        b_y=np.zeros(input_dim),
        activation="identity",
    )


@pytest.fixture
def vanilla():
    return make_vanilla()


@pytest.fixture
def classifier():
    return make_classifier()


@pytest.fixture
def classifier_dictionary(classifier):
    words = ["<unk>"] + [f"w{index}" for index in range(1, classifier.vocab_size)]
    return EmbeddingDictionary(words=words, vectors=classifier.embedding)


@pytest.fixture
def pairs():
    config = SeqPairConfig(steps=5, input_dim=3, output_dim=2)
    return generate_correlated_pairs(Rng(0).derive("seqpairs"), 20, config)


@pytest.fixture
def synthetic():
    """ (corpus, dictionary) at a size a unit test can train on. """
    return generate_synthetic_corpus(Rng(0).derive("corpus"), 40, 12, (4, 6), embed_dim=4)
