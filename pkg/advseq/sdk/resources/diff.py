"""
Exact input/parameter derivatives of both models, obtained by walking the
unfolded (acyclic) graph backwards in time, and the central-difference
oracles used to check them.
"""
from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np

from advseq.sdk.exceptions import (ConfigurationError, ParameterError,
                                   ShapeError, UnsupportedInputError)
from advseq.sdk.linalg import DTYPE
from advseq.sdk.resources.base_models import LSTM_GATES, Activation
from advseq.sdk.resources.losses import CrossEntropy, MeanSquaredError, get_loss
from advseq.sdk.resources.models import (LstmClassifierParams, LstmTrace,
                                         VanillaRnnParams, as_sequence,
                                         as_tokens, lstm_forward_embedded,
                                         rnn_forward)


FINITE_DIFF_STEP = 1e-5

CostGradient = np.ndarray


@dataclass(frozen=True)
class JacobianTensor:
    """ blocks[i, j] = ∂ output step j / ∂ input step i, shape (out_dim, in_dim). """
    blocks: np.ndarray      # (t_in, t_out, out_dim, in_dim)

    @property
    def input_len(self) -> int:
        return self.blocks.shape[0]

    @property
    def output_len(self) -> int:
        return self.blocks.shape[1]

    def block(self, i: int, j: int) -> np.ndarray:
        return self.blocks[i, j]

    def to_matrix(self) -> np.ndarray:
        """ Rows indexed by (input step, coord), columns by (output step, coord). """
        t_in, t_out, out_dim, in_dim = self.blocks.shape
        return self.blocks.transpose(0, 3, 1, 2).reshape(t_in * in_dim, t_out * out_dim)

    def is_causal(self) -> bool:
        """ True when every block with i > j is exactly zero. """
        rows, cols = np.tril_indices(self.input_len, k=-1, m=self.output_len)
        return not np.any(self.blocks[rows, cols])


@dataclass(frozen=True)
class EmbeddingJacobian:
    """ gradients[i, j] = ∂ logit j / ∂ embedding of word i. """
    gradients: np.ndarray   # (t, 2, embed_dim)

    def column(self, cls: int) -> np.ndarray:
        return self.gradients[:, cls, :]

    def saliency(self, cls: int) -> np.ndarray:
        """ L1 norm per word position of the class column. """
        return np.abs(self.column(cls)).sum(axis=1)


@dataclass(frozen=True)
class RnnGradients:
    inputs: np.ndarray
    params: Optional[Dict[str, np.ndarray]] = None


@dataclass(frozen=True)
class LstmGradients:
    embedded: np.ndarray
    params: Optional[Dict[str, np.ndarray]] = None


def _activation_derivative(p: VanillaRnnParams, hidden: np.ndarray) -> np.ndarray:
    if p.activation == Activation.identity:
        return np.ones_like(hidden)
    return 1.0 - hidden ** 2


def rnn_backward(p: VanillaRnnParams, x, trace, d_outputs, with_params: bool = True) -> RnnGradients:
    """
    Backpropagate output sensitivities through time.

    Args:
        p: network parameters.
        x: the (t, in) or (n, t, in) input of the forward pass.
        trace: RnnTrace of that forward pass.
        d_outputs: ∂cost/∂y, same shape as trace.outputs.
        with_params: also accumulate parameter gradients (summed over the batch).

    Returns:
        RnnGradients with ∂cost/∂x and, optionally, parameter gradients.
    """
    x = np.asarray(x, dtype=DTYPE)
    d_outputs = np.asarray(d_outputs, dtype=DTYPE)
    if d_outputs.shape != trace.outputs.shape:
        raise ShapeError("rnn_backward", d_outputs.shape, trace.outputs.shape)
    single = x.ndim == 2
    if single:
        x, hidden, d_outputs = x[None], trace.hidden[None], d_outputs[None]
    else:
        hidden = trace.hidden

    batch, steps, _ = x.shape
    derivative = _activation_derivative(p, hidden)
    d_hidden = d_outputs @ p.w_out
    d_inputs = np.zeros_like(x)
    d_w_in = np.zeros_like(p.w_in)
    d_w = np.zeros_like(p.w)
    d_b_h = np.zeros_like(p.b_h)
    carry = np.zeros((batch, p.hidden_dim))
    for t in reversed(range(steps)):
        d_pre = (d_hidden[:, t] + carry) * derivative[:, t]
        d_inputs[:, t] = d_pre @ p.w_in
        carry = d_pre @ p.w
        if with_params:
            d_w_in += d_pre.T @ x[:, t]
            d_b_h += d_pre.sum(axis=0)
            if t > 0:
                d_w += d_pre.T @ hidden[:, t - 1]

    params = None
    if with_params:
        params = {
            "w_in": d_w_in,
            "w": d_w,
            "w_out": np.einsum("ntb,nth->bh", d_outputs, hidden),
            "b_h": d_b_h,
            "b_y": d_outputs.sum(axis=(0, 1)),
        }
    return RnnGradients(inputs=d_inputs[0] if single else d_inputs, params=params)


def rnn_jacobian(p: VanillaRnnParams, x) -> JacobianTensor:
    """
    Exact input-output Jacobian of the vanilla RNN.

    For every output step j a (out_dim x hidden) sensitivity is walked back
    from h(j) to h(1); blocks with i > j are never written and stay exactly 0.
    """
    x = as_sequence(x, p.input_dim, "rnn_jacobian")
    if x.ndim != 2:
        raise ShapeError("rnn_jacobian", x.shape, ("t", p.input_dim))
    trace = rnn_forward(p, x)
    derivative = _activation_derivative(p, trace.hidden)
    steps = x.shape[0]
    blocks = np.zeros((steps, steps, p.output_dim, p.input_dim))
    for j in range(steps):
        sensitivity = p.w_out
        for k in range(j, -1, -1):
            d_pre = sensitivity * derivative[k]
            blocks[k, j] = d_pre @ p.w_in
            sensitivity = d_pre @ p.w
    return JacobianTensor(blocks=blocks)


def lstm_backward(p: LstmClassifierParams, trace: LstmTrace, d_hidden, with_params: bool = False) -> LstmGradients:
    """
    Backpropagate hidden-state sensitivities through the unrolled LSTM.

    Args:
        p: classifier parameters.
        trace: forward trace.
        d_hidden: (t, hidden) external ∂cost/∂h(t), e.g. from mean pooling.
        with_params: also return gate weight/bias gradients.

    Returns:
        LstmGradients with ∂cost/∂embedded and optionally gate parameter gradients.
    """
    d_hidden = np.asarray(d_hidden, dtype=DTYPE)
    steps, hidden_dim = trace.hidden.shape
    if d_hidden.shape != (steps, hidden_dim):
        raise ShapeError("lstm_backward", d_hidden.shape, (steps, hidden_dim))
    embed_dim = p.embed_dim
    weights, _ = p.stacked_gates()
    d_weights = np.zeros_like(weights)
    d_biases = np.zeros(weights.shape[0])
    d_embedded = np.zeros((steps, embed_dim))
    dh_next = np.zeros(hidden_dim)
    dc_next = np.zeros(hidden_dim)
    zeros = np.zeros(hidden_dim)
    for t in reversed(range(steps)):
        i_gate, f_gate = trace.input_gate[t], trace.forget_gate[t]
        o_gate, g_cand = trace.output_gate[t], trace.candidate[t]
        c_prev = trace.cells[t - 1] if t > 0 else zeros
        h_prev = trace.hidden[t - 1] if t > 0 else zeros

        dh = d_hidden[t] + dh_next
        tanh_c = np.tanh(trace.cells[t])
        dc = dh * o_gate * (1.0 - tanh_c ** 2) + dc_next
        d_pre = np.concatenate([
            dc * g_cand * i_gate * (1.0 - i_gate),
            dc * c_prev * f_gate * (1.0 - f_gate),
            dh * tanh_c * o_gate * (1.0 - o_gate),
            dc * i_gate * (1.0 - g_cand ** 2),
        ])
        dc_next = dc * f_gate
        dz = weights.T @ d_pre
        d_embedded[t] = dz[:embed_dim]
        dh_next = dz[embed_dim:]
        if with_params:
            d_weights += np.outer(d_pre, np.concatenate([trace.embedded[t], h_prev]))
            d_biases += d_pre

    params = None
    if with_params:
        params = {}
        for index, gate in enumerate(LSTM_GATES):
            rows = slice(index * hidden_dim, (index + 1) * hidden_dim)
            params[f"w_{gate}"] = d_weights[rows]
            params[f"b_{gate}"] = d_biases[rows]
    return LstmGradients(embedded=d_embedded, params=params)


def pooled_hidden_sensitivity(p: LstmClassifierParams, trace: LstmTrace, d_logits) -> np.ndarray:
    """ ∂cost/∂h(t) for every t, given ∂cost/∂logits, through the mean pooling layer. """
    d_pooled = np.asarray(d_logits, dtype=DTYPE) @ p.w_softmax
    return np.tile(d_pooled / trace.length, (trace.length, 1))


def classifier_param_gradients(p: LstmClassifierParams, tokens, trace: LstmTrace, d_logits) -> Dict[str, np.ndarray]:
    """ Gradients of every classifier parameter, embeddings included, for one sentence. """
    d_logits = np.asarray(d_logits, dtype=DTYPE)
    grads = lstm_backward(p, trace, pooled_hidden_sensitivity(p, trace, d_logits), with_params=True)
    params = dict(grads.params)
    params["w_softmax"] = np.outer(d_logits, trace.pooled)
    params["b_softmax"] = d_logits.copy()
    d_embedding = np.zeros_like(p.embedding)
    np.add.at(d_embedding, np.asarray(tokens), grads.embedded)
    params["embedding"] = d_embedding
    return params


def classifier_embedding_jacobian(p: LstmClassifierParams, s) -> EmbeddingJacobian:
    """
    Gradient of each class logit with respect to each word's embedding.

    Args:
        p: classifier parameters.
        s: token sequence.

    Raises:
        InputError: on an empty sequence or an out-of-range token id.

    Returns:
        EmbeddingJacobian of shape (t, 2, embed_dim).
    """
    tokens = as_tokens(s, p.vocab_size)
    return embedded_logit_jacobian(p, p.embedding[tokens])


def embedded_logit_jacobian(p: LstmClassifierParams, embedded) -> EmbeddingJacobian:
    trace = lstm_forward_embedded(p, embedded)
    columns = []
    for cls in range(p.w_softmax.shape[0]):
        d_logits = np.zeros(p.w_softmax.shape[0])
        d_logits[cls] = 1.0
        grads = lstm_backward(p, trace, pooled_hidden_sensitivity(p, trace, d_logits))
        columns.append(grads.embedded)
    return EmbeddingJacobian(gradients=np.stack(columns, axis=1))


def resolve_loss(loss):
    if isinstance(loss, (MeanSquaredError, CrossEntropy)):
        return loss
    return get_loss(loss)


def cost_input_gradient(model, x, y_true, loss) -> CostGradient:
    """
    Exact gradient of a scalar cost with respect to every input coordinate.

    Args:
        model: VanillaRnnParams (x is a (t, in) sequence), or LstmClassifierParams
            (x is an embedded (t, embed_dim) sequence).
        x: continuous input sequence.
        y_true: target output sequence, or class label for cross-entropy.
        loss: a loss object or LossKind.

    Raises:
        UnsupportedInputError: for token ids (discrete inputs have no gradient).
        ShapeError: when the model output and y_true do not match.

    Returns:
        Array shaped like x.
    """
    loss = resolve_loss(loss)
    if np.issubdtype(np.asarray(x).dtype, np.integer):
        raise UnsupportedInputError(
            "Token ids are discrete; gradients exist only in embedding space"
        )
    if isinstance(model, VanillaRnnParams):
        if isinstance(loss, CrossEntropy):
            raise ConfigurationError("cross_entropy needs a classifier; use mean_squared_error")
        x = as_sequence(x, model.input_dim, "cost_input_gradient")
        trace = rnn_forward(model, x)
        d_outputs = loss.gradient(trace.outputs, y_true)
        return rnn_backward(model, x, trace, d_outputs, with_params=False).inputs
    if isinstance(model, LstmClassifierParams):
        trace = lstm_forward_embedded(model, x)
        d_logits = loss.gradient(trace.logits, y_true)
        d_hidden = pooled_hidden_sensitivity(model, trace, d_logits)
        return lstm_backward(model, trace, d_hidden).embedded
    raise UnsupportedInputError(f"Unsupported model type {type(model).__name__}")


def finite_diff_jacobian(f: Callable[[np.ndarray], np.ndarray], x, h: float = FINITE_DIFF_STEP) -> JacobianTensor:
    """
    Central-difference Jacobian of a black-box sequence function.

    A 1-D output (e.g. two logits) is treated as a single output step.

    Raises:
        ParameterError: when h <= 0.
    """
    if not h > 0:
        raise ParameterError(f"finite difference step must be positive, got {h}")
    x = as_sequence(x, operation="finite_diff_jacobian").copy()
    steps, width = x.shape
    reference = np.atleast_2d(f(x))
    blocks = np.zeros((steps, reference.shape[0], reference.shape[1], width))
    for i in range(steps):
        for a in range(width):
            original = x[i, a]
            x[i, a] = original + h
            upper = np.atleast_2d(f(x))
            x[i, a] = original - h
            lower = np.atleast_2d(f(x))
            x[i, a] = original
            blocks[i, :, :, a] = (upper - lower) / (2.0 * h)
    return JacobianTensor(blocks=blocks)


def finite_diff_gradient(f: Callable[[np.ndarray], float], x, h: float = FINITE_DIFF_STEP) -> np.ndarray:
    """ Central-difference gradient of a scalar function of an array of any shape. """
    if not h > 0:
        raise ParameterError(f"finite difference step must be positive, got {h}")
    x = np.array(x, dtype=DTYPE, copy=True)
    grad = np.zeros_like(x)
    flat, flat_grad = x.reshape(-1), grad.reshape(-1)
    for index in range(flat.size):
        original = flat[index]
        flat[index] = original + h
        upper = f(x)
        flat[index] = original - h
        lower = f(x)
        flat[index] = original
        flat_grad[index] = (upper - lower) / (2.0 * h)
    return grad
