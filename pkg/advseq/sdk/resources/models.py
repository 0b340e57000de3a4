""" The vanilla sequential RNN and the LSTM review classifier: construction and forward passes. """
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from advseq.sdk.exceptions import InputError, ShapeError
from advseq.sdk.linalg import (DTYPE, Rng, normal_sample, sigmoid_vec, softmax,
                               tanh_vec, uniform_matrix)
from advseq.sdk.resources.base_models import (LSTM_GATES, Activation,
                                              LstmClassifierParamsBase,
                                              VanillaRnnParamsBase)


NUM_CLASSES = 2
OOV_TOKEN = 0


class VanillaRnnParams(VanillaRnnParamsBase):
    """
    Elman-style recurrent network:
        h(t) = tanh(w_in·x(t) + w·h(t-1) + b_h),  h(0) = 0
        y(t) = w_out·h(t) + b_y
    """

    @property
    def input_dim(self) -> int:
        return self.w_in.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w_in.shape[0]

    @property
    def output_dim(self) -> int:
        return self.w_out.shape[0]

    @classmethod
    def initialize(
        cls,
        rng: Rng,
        input_dim: int,
        hidden_dim: int,
        output_dim: int,
        init_scale: float = 0.1,
        activation: Activation = Activation.tanh,
    ) -> "VanillaRnnParams":
        """ Uniform(-init_scale, init_scale) weights and zero biases. """
        return cls(
            w_in=uniform_matrix(rng, (hidden_dim, input_dim), init_scale),
            w=uniform_matrix(rng, (hidden_dim, hidden_dim), init_scale),
            w_out=uniform_matrix(rng, (output_dim, hidden_dim), init_scale),
            b_h=np.zeros(hidden_dim),
            b_y=np.zeros(output_dim),
            activation=activation,
        )

    def replace(self, **arrays) -> "VanillaRnnParams":
        """ Copy with some arrays swapped out. """
        return VanillaRnnParams(**{**self.arrays(), "activation": self.activation, **arrays})


class LstmClassifierParams(LstmClassifierParamsBase):
    """ input -> LSTM -> mean pooling -> softmax, over embedded tokens. """

    @property
    def vocab_size(self) -> int:
        return self.embedding.shape[0]

    @property
    def embed_dim(self) -> int:
        return self.embedding.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w_input.shape[0]

    @classmethod
    def initialize(
        cls,
        rng: Rng,
        vocab_size: int,
        embed_dim: int,
        hidden_dim: int,
        init_scale: float = 0.1,
        embedding: Optional[np.ndarray] = None,
    ) -> "LstmClassifierParams":
        """
        Uniform(-init_scale, init_scale) weights, zero biases and N(0, 1) embeddings.

        Args:
            rng: random source.
            vocab_size: dictionary size, reserved id 0 included.
            embed_dim: embedding width.
            hidden_dim: LSTM state width.
            init_scale: half-width of the uniform weight init.
            embedding: start from these embeddings instead of sampling them.

        Returns:
            Fresh classifier parameters.
        """
        if embedding is None:
            embedding = normal_sample(rng, 0.0, 1.0, (vocab_size, embed_dim))
        elif np.shape(embedding) != (vocab_size, embed_dim):
            raise ShapeError("initialize", np.shape(embedding), (vocab_size, embed_dim))
        arrays = {"embedding": embedding}
        for gate in LSTM_GATES:
            arrays[f"w_{gate}"] = uniform_matrix(rng, (hidden_dim, embed_dim + hidden_dim), init_scale)
            arrays[f"b_{gate}"] = np.zeros(hidden_dim)
        arrays["w_softmax"] = uniform_matrix(rng, (NUM_CLASSES, hidden_dim), init_scale)
        arrays["b_softmax"] = np.zeros(NUM_CLASSES)
        return cls(**arrays)

    def replace(self, **arrays) -> "LstmClassifierParams":
        """ Copy with some arrays swapped out. """
        return LstmClassifierParams(**{**self.arrays(), **arrays})

    def stacked_gates(self) -> Tuple[np.ndarray, np.ndarray]:
        """ Gate weights stacked as (4·hidden, embed+hidden) in LSTM_GATES order, and their biases. """
        weights = np.vstack([getattr(self, f"w_{gate}") for gate in LSTM_GATES])
        biases = np.concatenate([getattr(self, f"b_{gate}") for gate in LSTM_GATES])
        return weights, biases


@dataclass(frozen=True)
class RnnTrace:
    """ Forward pass of the vanilla RNN. """
    outputs: np.ndarray     # (..., t, output_dim)
    hidden: np.ndarray      # (..., t, hidden_dim)


@dataclass(frozen=True)
class LstmTrace:
    """ Every intermediate state of a classifier forward pass. """
    embedded: np.ndarray    # (t, embed_dim)
    input_gate: np.ndarray  # (t, hidden_dim)
    forget_gate: np.ndarray
    output_gate: np.ndarray
    candidate: np.ndarray
    cells: np.ndarray
    hidden: np.ndarray
    pooled: np.ndarray      # (hidden_dim,)
    logits: np.ndarray      # (2,)
    probs: np.ndarray       # (2,)

    @property
    def length(self) -> int:
        return self.embedded.shape[0]


def as_sequence(x, width: Optional[int] = None, operation: str = "sequence") -> np.ndarray:
    """ Validate a (t, width) real sequence, t >= 1, optionally with a leading batch axis. """
    array = np.asarray(x, dtype=DTYPE)
    if array.ndim not in (2, 3) or array.shape[-2] < 1 or array.shape[-1] < 1:
        raise ShapeError(operation, array.shape, ("t", width or "width"))
    if width is not None and array.shape[-1] != width:
        raise ShapeError(operation, array.shape, ("t", width))
    if not np.all(np.isfinite(array)):
        raise InputError(f"{operation}: sequence contains non-finite values")
    return array


def as_tokens(s, vocab_size: int) -> np.ndarray:
    """ Validate a token sequence against a vocabulary size. """
    tokens = np.asarray(s)
    if tokens.ndim != 1 or tokens.size == 0:
        raise InputError(f"Token sequence must be a non-empty 1-D list, got shape {tokens.shape}")
    if not np.issubdtype(tokens.dtype, np.integer):
        raise InputError(f"Token ids must be integers, got dtype {tokens.dtype}")
    bad = tokens[(tokens < 0) | (tokens >= vocab_size)]
    if bad.size:
        raise InputError(f"Token id {int(bad[0])} out of range [0, {vocab_size})")
    return tokens.astype(np.int64)


def activate(p: VanillaRnnParams, pre: np.ndarray) -> np.ndarray:
    if p.activation == Activation.identity:
        return pre
    return tanh_vec(pre)


def rnn_forward(p: VanillaRnnParams, x) -> RnnTrace:
    """
    Run the vanilla RNN over a sequence.

    Args:
        p: network parameters.
        x: (t, input_dim) input, or (n, t, input_dim) for n independent sequences.

    Raises:
        ShapeError: when the step width is not input_dim.

    Returns:
        RnnTrace with the output sequence and the hidden trace.
    """
    x = as_sequence(x, p.input_dim, "rnn_forward")
    steps = x.shape[-2]
    hidden = np.zeros(x.shape[:-1] + (p.hidden_dim,))
    state = np.zeros(x.shape[:-2] + (p.hidden_dim,))
    for t in range(steps):
        state = activate(p, x[..., t, :] @ p.w_in.T + state @ p.w.T + p.b_h)
        hidden[..., t, :] = state
    outputs = hidden @ p.w_out.T + p.b_y
    return RnnTrace(outputs=outputs, hidden=hidden)


def embed(p: LstmClassifierParams, s) -> np.ndarray:
    tokens = as_tokens(s, p.vocab_size)
    return p.embedding[tokens]


def lstm_forward_embedded(p: LstmClassifierParams, embedded) -> LstmTrace:
    """
    Classifier forward pass from an already embedded (t, embed_dim) sequence.

    Standard forget-gate LSTM without peepholes, h(0) = c(0) = 0; the hidden
    states are averaged and mapped to two logits.
    """
    embedded = as_sequence(embedded, p.embed_dim, "lstm_forward")
    if embedded.ndim != 2:
        raise ShapeError("lstm_forward", embedded.shape, ("t", p.embed_dim))
    steps, hidden_dim = embedded.shape[0], p.hidden_dim
    weights, biases = p.stacked_gates()

    gates = {gate: np.zeros((steps, hidden_dim)) for gate in LSTM_GATES}
    cells = np.zeros((steps, hidden_dim))
    hidden = np.zeros((steps, hidden_dim))
    h_prev = np.zeros(hidden_dim)
    c_prev = np.zeros(hidden_dim)
    for t in range(steps):
        pre = weights @ np.concatenate([embedded[t], h_prev]) + biases
        i_gate = sigmoid_vec(pre[:hidden_dim])
        f_gate = sigmoid_vec(pre[hidden_dim:2 * hidden_dim])
        o_gate = sigmoid_vec(pre[2 * hidden_dim:3 * hidden_dim])
        g_cand = tanh_vec(pre[3 * hidden_dim:])
        c_prev = f_gate * c_prev + i_gate * g_cand
        h_prev = o_gate * tanh_vec(c_prev)
        for gate, value in zip(LSTM_GATES, (i_gate, f_gate, o_gate, g_cand)):
            gates[gate][t] = value
        cells[t] = c_prev
        hidden[t] = h_prev

    pooled = hidden.mean(axis=0)
    logits = p.w_softmax @ pooled + p.b_softmax
    return LstmTrace(
        embedded=embedded,
        input_gate=gates["input"],
        forget_gate=gates["forget"],
        output_gate=gates["output"],
        candidate=gates["candidate"],
        cells=cells,
        hidden=hidden,
        pooled=pooled,
        logits=logits,
        probs=softmax(logits),
    )


def lstm_classify(p: LstmClassifierParams, s) -> LstmTrace:
    """
    Classify a token sequence.

    Raises:
        InputError: on an empty sequence or an out-of-range token id.
    """
    return lstm_forward_embedded(p, embed(p, s))


def class_of_logits(logits) -> int:
    """ argmax over two logits, ties go to class 0. """
    return int(logits[1] > logits[0])


def predict_class(p: LstmClassifierParams, s) -> int:
    """ Predicted class (0 negative, 1 positive) of a token sequence. """
    return class_of_logits(lstm_classify(p, s).logits)
