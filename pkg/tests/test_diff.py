import numpy as np
import pytest

from advseq.sdk.exceptions import ParameterError, UnsupportedInputError
from advseq.sdk.resources.diff import (classifier_embedding_jacobian,
                                       classifier_param_gradients,
                                       cost_input_gradient,
                                       finite_diff_gradient,
                                       finite_diff_jacobian, rnn_backward,
                                       rnn_jacobian)
from advseq.sdk.resources.losses import CrossEntropy, MeanSquaredError
from advseq.sdk.resources.models import (lstm_classify, lstm_forward_embedded,
                                         rnn_forward)

from conftest import make_classifier, make_vanilla

RTOL = 1e-4
ATOL = 1e-8


@pytest.mark.parametrize("seed", range(12))
def test_rnn_jacobian_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    input_dim, output_dim = int(rng.integers(1, 6)), int(rng.integers(1, 6))
    model = make_vanilla(seed, input_dim, int(rng.integers(1, 6)), output_dim)
    x = rng.normal(size=(int(rng.integers(1, 7)), input_dim))
    numeric = finite_diff_jacobian(lambda seq: rnn_forward(model, seq).outputs, x)
    np.testing.assert_allclose(rnn_jacobian(model, x).blocks, numeric.blocks, rtol=RTOL, atol=ATOL)


@pytest.mark.parametrize("seed", range(12))
def test_embedding_jacobian_matches_finite_differences(seed):
    rng = np.random.default_rng(100 + seed)
    model = make_classifier(seed, vocab_size=10, embed_dim=3, hidden_dim=int(rng.integers(1, 5)))
    tokens = rng.integers(0, 10, int(rng.integers(1, 7)))
    analytic = classifier_embedding_jacobian(model, tokens).gradients
    numeric = finite_diff_jacobian(lambda e: lstm_forward_embedded(model, e).logits, model.embedding[tokens])
    assert numeric.blocks.shape == (len(tokens), 1, 2, 3)
    np.testing.assert_allclose(analytic, numeric.blocks[:, 0], rtol=RTOL, atol=ATOL)


@pytest.mark.parametrize("seed", range(10))
def test_rnn_jacobian_is_causal(seed):
    model = make_vanilla(seed)
    x = np.random.default_rng(seed).normal(size=(10, 3))
    jacobian = rnn_jacobian(model, x)
    assert jacobian.is_causal()
    for i in range(10):
        for j in range(i):
            assert not np.any(jacobian.block(i, j))


def test_linear_network_jacobian_does_not_depend_on_input():
    model = make_vanilla(4, activation="identity")
    rng = np.random.default_rng(4)
    first = rnn_jacobian(model, rng.normal(size=(5, 3))).blocks
    second = rnn_jacobian(model, rng.normal(size=(5, 3))).blocks
    np.testing.assert_allclose(first, second, rtol=0, atol=1e-12)


def test_single_step_jacobian_is_the_chain_rule_product(vanilla):
    x = np.array([[0.4, -0.1, 0.7]])
    hidden = np.tanh(vanilla.w_in @ x[0] + vanilla.b_h)
    expected = vanilla.w_out @ np.diag(1.0 - hidden ** 2) @ vanilla.w_in
    np.testing.assert_allclose(rnn_jacobian(vanilla, x).block(0, 0), expected)


def test_to_matrix_layout(vanilla):
    jacobian = rnn_jacobian(vanilla, np.random.default_rng(0).normal(size=(3, 3)))
    matrix = jacobian.to_matrix()
    assert matrix.shape == (3 * 3, 3 * 2)
    assert matrix[2 * 3 + 1, 2 * 2 + 0] == jacobian.blocks[2, 2, 0, 1]
    assert matrix[0 * 3 + 2, 1 * 2 + 1] == jacobian.blocks[0, 1, 1, 2]


def test_cost_gradient_of_vanilla_rnn(vanilla):
    rng = np.random.default_rng(5)
    x, y = rng.normal(size=(4, 3)), rng.normal(size=(4, 2))
    loss = MeanSquaredError()
    numeric = finite_diff_gradient(lambda seq: loss.value(rnn_forward(vanilla, seq).outputs, y), x)
    np.testing.assert_allclose(cost_input_gradient(vanilla, x, y, loss), numeric, rtol=RTOL, atol=ATOL)


def test_cost_gradient_of_classifier(classifier):
    embedded = classifier.embedding[[3, 1, 7]]
    loss = CrossEntropy()
    numeric = finite_diff_gradient(lambda e: loss.value(lstm_forward_embedded(classifier, e).logits, 1), embedded)
    np.testing.assert_allclose(cost_input_gradient(classifier, embedded, 1, "cross_entropy"), numeric,
                               rtol=RTOL, atol=ATOL)


def test_cost_gradient_refuses_token_ids(classifier):
    with pytest.raises(UnsupportedInputError):
        cost_input_gradient(classifier, np.array([1, 2, 3]), 0, "cross_entropy")


@pytest.mark.parametrize("name", ["w_in", "w", "w_out", "b_h", "b_y"])
def test_rnn_parameter_gradients(vanilla, name):
    rng = np.random.default_rng(6)
    x, y = rng.normal(size=(4, 3)), rng.normal(size=(4, 2))
    loss = MeanSquaredError()
    trace = rnn_forward(vanilla, x)
    analytic = rnn_backward(vanilla, x, trace, loss.gradient(trace.outputs, y)).params[name]

    def cost(value):
        return loss.value(rnn_forward(vanilla.replace(**{name: value}), x).outputs, y)

    numeric = finite_diff_gradient(cost, getattr(vanilla, name))
    np.testing.assert_allclose(analytic, numeric, rtol=RTOL, atol=ATOL)


@pytest.mark.parametrize("name", ["embedding", "w_forget", "b_candidate", "w_softmax", "b_softmax"])
def test_classifier_parameter_gradients(classifier, name):
    tokens = np.array([2, 9, 4, 2])
    loss = CrossEntropy()
    trace = lstm_classify(classifier, tokens)
    analytic = classifier_param_gradients(classifier, tokens, trace, loss.gradient(trace.logits, 0))[name]

    def cost(value):
        return loss.value(lstm_classify(classifier.replace(**{name: value}), tokens).logits, 0)

    numeric = finite_diff_gradient(cost, getattr(classifier, name))
    np.testing.assert_allclose(analytic, numeric, rtol=RTOL, atol=ATOL)


def test_finite_differences_need_a_positive_step():
    with pytest.raises(ParameterError):
        finite_diff_jacobian(lambda x: x, np.zeros((2, 2)), h=0.0)
    with pytest.raises(ParameterError):
        finite_diff_gradient(lambda x: 0.0, np.zeros(2), h=-1.0)
