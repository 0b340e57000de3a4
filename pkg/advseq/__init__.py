""" Top-level package for advseq """

__app_name__ = "advseq"
__version__ = "0.1.0"

import logging
from logging import NullHandler

from advseq.cli import cli

from .sdk.linalg import Rng

from .sdk.resources import models
from .sdk.resources.models import (LstmClassifierParams, VanillaRnnParams,
                                   lstm_classify, predict_class, rnn_forward)

from .sdk.resources import diff
from .sdk.resources.diff import (classifier_embedding_jacobian,
                                 cost_input_gradient, finite_diff_jacobian,
                                 rnn_jacobian)

from .sdk.resources import attacks
from .sdk.resources.attacks import craft_sequential, craft_word_swap, fgsm

from .sdk.resources import data
from .sdk.resources.data import (EmbeddingDictionary, LabeledCorpus,
                                 SeqPairSet, generate_correlated_pairs,
                                 generate_synthetic_corpus)

from .sdk.resources import training
from .sdk.resources.training import (evaluate, train_classifier,
                                     train_sequential)

from .sdk.resources.serialization import load_model, save_model


__all__ = [
    "cli",
    "Rng",

    "models",
    "VanillaRnnParams",
    "LstmClassifierParams",
    "rnn_forward",
    "lstm_classify",
    "predict_class",

    "diff",
    "rnn_jacobian",
    "classifier_embedding_jacobian",
    "cost_input_gradient",
    "finite_diff_jacobian",

    "attacks",
    "fgsm",
    "craft_word_swap",
    "craft_sequential",

    "data",
    "EmbeddingDictionary",
    "LabeledCorpus",
    "SeqPairSet",
    "generate_synthetic_corpus",
    "generate_correlated_pairs",

    "training",
    "train_sequential",
    "train_classifier",
    "evaluate",

    "save_model",
    "load_model",
]

logging.getLogger(__name__).addHandler(NullHandler())
