import logging
from functools import partial

import numpy as np
import pytest

from advseq.sdk.exceptions import (ConfigurationError, ShapeError,
                                   UnsupportedInputError)
from advseq.sdk.resources.attacks import (SUMMARY_COLUMNS, attack_many,
                                          audit_swap_decisions,
                                          craft_sequential, craft_word_swap,
                                          fgsm, selectivity_scores,
                                          sign_match_candidate, summarize,
                                          summary_rows, swap_oracle)
from advseq.sdk.linalg import Rng
from advseq.sdk.resources.base_models import (FgsmConfig,
                                              SequentialAttackConfig,
                                              WordSwapConfig)
from advseq.sdk.resources.data import EmbeddingDictionary
from advseq.sdk.resources.losses import MeanSquaredError
from advseq.sdk.resources.models import (LstmClassifierParams, lstm_classify,
                                         rnn_forward)

from conftest import linear_model, make_vanilla


def constant_classifier(classifier) -> LstmClassifierParams:
    """ Logits fixed at (1, 0) whatever the input: zero gradients everywhere. """
    return classifier.replace(w_softmax=np.zeros((2, classifier.hidden_dim)), b_softmax=np.array([1.0, 0.0]))


# FGSM

def test_fgsm_perturbation_is_bounded(vanilla):
    rng = np.random.default_rng(0)
    x, y = rng.normal(size=(5, 3)), rng.normal(size=(5, 2))
    outcome = fgsm(vanilla, x, y, "mean_squared_error", FgsmConfig(epsilon=0.1))
    assert np.max(np.abs(outcome.adversarial - x)) <= 0.1 + 1e-12
    assert outcome.perturbation_norm == 0.1
    assert outcome.changed_positions == [0, 1, 2, 3, 4]
    np.testing.assert_allclose(outcome.output_delta,
                               rnn_forward(vanilla, outcome.adversarial).outputs - rnn_forward(vanilla, x).outputs)


def test_fgsm_with_zero_epsilon_changes_nothing(vanilla):
    rng = np.random.default_rng(1)
    x, y = rng.normal(size=(4, 3)), rng.normal(size=(4, 2))
    outcome = fgsm(vanilla, x, y, "mean_squared_error", FgsmConfig(epsilon=0.0))
    np.testing.assert_array_equal(outcome.adversarial, x)
    assert not outcome.success
    assert outcome.perturbation_norm == 0.0
    assert outcome.changed_positions == []


def test_fgsm_small_step_does_not_decrease_the_loss():
    rng = np.random.default_rng(2)
    loss = MeanSquaredError()
    increased = 0
    for seed in range(20):
        model = make_vanilla(seed)
        x, y = rng.normal(size=(5, 3)), rng.normal(size=(5, 2))
        outcome = fgsm(model, x, y, loss, FgsmConfig(epsilon=1e-3))
        before = loss.value(rnn_forward(model, x).outputs, y)
        after = loss.value(rnn_forward(model, outcome.adversarial).outputs, y)
        increased += after >= before
    assert increased >= 19


def test_fgsm_on_classifier_reports_classes(classifier):
    embedded = classifier.embedding[[1, 4, 6, 2]]
    outcome = fgsm(classifier, embedded, 1, "cross_entropy", FgsmConfig(epsilon=0.5))
    assert outcome.original_class in (0, 1)
    assert outcome.success == (outcome.original_class != outcome.adversarial_class)


def test_fgsm_refuses_token_ids(classifier):
    with pytest.raises(UnsupportedInputError):
        fgsm(classifier, np.array([1, 2, 3]), 0, "cross_entropy")


# word swap

def test_sign_match_candidate():
    embedding = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [-1.0, 1.0]])
    model = LstmClassifierParams.initialize(Rng(0), 4, 2, 2, embedding=embedding)
    assert sign_match_candidate(model, 1, np.array([1.0, 1.0])) == 2
    assert sign_match_candidate(model, 1, np.array([-1.0, 1.0])) == 3
    # a tie goes to the lowest id; neither 0 nor the current word is a candidate
    assert sign_match_candidate(model, 1, np.array([0.0, 0.0])) == 2
    assert sign_match_candidate(model, 2, np.array([1.0, 1.0])) == 3


def test_budget():
    assert WordSwapConfig().budget(8) == 2
    assert WordSwapConfig().budget(3) == 1
    assert WordSwapConfig(max_changed_words=10).budget(4) == 4


def test_word_swap_without_saliency_visits_positions_in_order(classifier, classifier_dictionary):
    model = constant_classifier(classifier)
    tokens = np.array([3, 1, 5, 7])
    outcome = craft_word_swap(model, tokens, classifier_dictionary, WordSwapConfig(max_changed_words=2))
    assert not outcome.success
    assert outcome.changed_positions == [0, 1]
    np.testing.assert_array_equal(outcome.adversarial, [1, 2, 5, 7])
    np.testing.assert_array_equal(outcome.original, tokens)
    assert outcome.perturbation_norm == 2.0
    assert [decision.reduced for decision in outcome.decisions] == [False, False]


def test_word_swap_respects_budget_and_leaves_model_alone(classifier, classifier_dictionary):
    before = {name: array.copy() for name, array in classifier.arrays().items()}
    tokens = np.array([2, 8, 3, 3, 11, 6, 4, 9])
    outcome = craft_word_swap(classifier, tokens, classifier_dictionary)
    assert len(outcome.changed_positions) <= 2
    assert len(set(outcome.changed_positions)) == len(outcome.changed_positions)
    assert outcome.perturbation_norm == len(outcome.changed_positions)
    assert 0 not in outcome.adversarial[outcome.changed_positions]
    assert outcome.adversarial_class == int(lstm_classify(classifier, outcome.adversarial).logits.argmax())
    for name, array in classifier.arrays().items():
        np.testing.assert_array_equal(array, before[name])


def test_word_swap_needs_a_matching_dictionary(classifier):
    small = EmbeddingDictionary(words=["<unk>", "a", "b"], vectors=np.zeros((3, 3)))
    with pytest.raises(ConfigurationError):
        craft_word_swap(classifier, [1, 2], small)


def test_swap_oracle_on_constant_model(classifier, classifier_dictionary):
    model = constant_classifier(classifier)
    assert swap_oracle(model, [3, 4, 5], 1, classifier_dictionary, 0).size == 0


def test_swap_oracle_agrees_with_brute_force(classifier, classifier_dictionary):
    tokens = np.array([3, 4, 5])
    baseline = lstm_classify(classifier, tokens).logits[1]
    expected = []
    for candidate in range(1, classifier.vocab_size):
        if candidate == 4:
            continue
        trial = tokens.copy()
        trial[1] = candidate
        if lstm_classify(classifier, trial).logits[1] < baseline:
            expected.append(candidate)
    np.testing.assert_array_equal(swap_oracle(classifier, tokens, 1, classifier_dictionary, 1), expected)


def test_audit_logs_every_non_reducing_swap(classifier, classifier_dictionary, caplog):
    model = constant_classifier(classifier)
    outcome = craft_word_swap(model, [3, 1, 5, 7], classifier_dictionary, WordSwapConfig(max_changed_words=2))
    with caplog.at_level(logging.WARNING, logger="advseq.sdk.resources.attacks"):
        audit = audit_swap_decisions([outcome])
    assert audit == {"decisions": 2, "reduced": 0, "reduction_rate": 0.0}
    assert len([r for r in caplog.records if r.levelno == logging.WARNING]) == 2
    assert audit_swap_decisions([])["reduction_rate"] is None


# sequential targeting

def test_direction_target_moves_only_the_targeted_output():
    model = linear_model(2, np.zeros((2, 2)))
    x = np.zeros((3, 2))
    cfg = SequentialAttackConfig(targets=[{"step": 2, "coord": 0, "direction": 1}], step_size=0.1)
    outcome = craft_sequential(model, x, cfg)
    assert outcome.success
    assert outcome.iterations == 1
    assert outcome.changed_positions == [2]
    assert outcome.perturbation_norm == pytest.approx(0.1)
    assert outcome.output_delta[2, 0] > 0
    untargeted = np.ones_like(outcome.output_delta, dtype=bool)
    untargeted[2, 0] = False
    assert not np.any(outcome.output_delta[untargeted])


def test_value_target_is_reached_within_delta():
    model = linear_model(2, np.zeros((2, 2)))
    x = np.zeros((3, 2))
    cfg = SequentialAttackConfig(targets=[{"step": 1, "coord": 1, "value": 0.3}], step_size=0.1, delta=0.05)
    outcome = craft_sequential(model, x, cfg)
    assert outcome.success
    assert outcome.iterations == 3
    assert abs(rnn_forward(model, outcome.adversarial).outputs[1, 1] - 0.3) < 0.05


def test_single_step_sequence_is_perturbed_in_place():
    model = linear_model(2, np.zeros((2, 2)))
    cfg = SequentialAttackConfig(targets=[{"step": 0, "coord": 0, "direction": 1}], step_size=0.1)
    outcome = craft_sequential(model, np.zeros((1, 2)), cfg)
    assert outcome.success
    assert outcome.iterations == 1
    assert outcome.changed_positions == [0]
    np.testing.assert_allclose(outcome.adversarial, [[0.1, 0.0]])


def test_single_step_sequence_on_a_tanh_network(vanilla):
    x = np.random.default_rng(6).normal(size=(1, 3))
    cfg = SequentialAttackConfig(targets=[{"step": 0, "coord": 1, "direction": -1}], max_iters=5)
    outcome = craft_sequential(vanilla, x, cfg)
    assert outcome.adversarial.shape == (1, 3)
    assert outcome.changed_positions in ([], [0])
    assert outcome.iterations <= 5
    assert outcome.output_delta.shape == (1, 2)


def test_target_already_met_needs_no_perturbation(vanilla):
    x = np.random.default_rng(3).normal(size=(4, 3))
    current = rnn_forward(vanilla, x).outputs
    cfg = SequentialAttackConfig(targets=[{"step": 2, "coord": 1, "value": float(current[2, 1])}])
    outcome = craft_sequential(vanilla, x, cfg)
    assert outcome.success
    assert outcome.iterations == 0
    assert outcome.perturbation_norm == 0.0


def test_no_selective_coordinate_gives_a_diagnostic():
    # every input feeds every later output equally
    model = linear_model(1, np.ones((1, 1)))
    x = np.zeros((3, 1))
    cfg = SequentialAttackConfig(targets=[{"step": 0, "coord": 0, "direction": 1}])
    outcome = craft_sequential(model, x, cfg)
    assert not outcome.success
    assert outcome.diagnostic
    assert outcome.iterations == 0
    np.testing.assert_array_equal(outcome.adversarial, x)


def test_target_outside_the_output_is_rejected(vanilla):
    cfg = SequentialAttackConfig(targets=[{"step": 5, "coord": 0, "direction": 1}])
    with pytest.raises(ConfigurationError):
        craft_sequential(vanilla, np.zeros((3, 3)), cfg)


def test_target_needs_exactly_one_of_value_or_direction():
    with pytest.raises(ValueError):
        SequentialAttackConfig(targets=[{"step": 0, "coord": 0}])
    with pytest.raises(ValueError):
        SequentialAttackConfig(targets=[{"step": 0, "coord": 0, "value": 1.0, "direction": 1}])
    with pytest.raises(ValueError):
        SequentialAttackConfig(targets=[{"step": 0, "coord": 0, "direction": 2}])


def test_selectivity_scores():
    blocks = np.zeros((2, 2, 1, 1))
    blocks[0, 0] = 3.0
    blocks[0, 1] = 1.0
    blocks[1, 1] = 2.0
    scores = selectivity_scores(blocks, 0, 0, 1e-12)
    np.testing.assert_allclose(scores[:, 0], [3.0, 0.0])


# batching and summaries

def test_attack_many_keeps_input_order():
    items = [-3, 1, -2, 5]
    assert attack_many(abs, items) == [3, 1, 2, 5]
    assert attack_many(abs, items, jobs=2) == [3, 1, 2, 5]


def test_attack_many_raises_worker_errors_in_the_caller(vanilla):
    cfg = SequentialAttackConfig(targets=[{"step": 0, "coord": 0, "direction": 1}])
    worker = partial(craft_sequential, vanilla, cfg=cfg)
    items = [np.zeros((3, 3)), np.zeros((3, 4))]
    for jobs in (1, 2):
        with pytest.raises(ShapeError) as excinfo:
            attack_many(worker, items, jobs=jobs)
        assert excinfo.value.left_shape == (3, 4)


def test_summary_rows_end_with_a_mean_row(vanilla):
    rng = np.random.default_rng(4)
    outcomes = [
        fgsm(vanilla, rng.normal(size=(3, 3)), rng.normal(size=(3, 2)), "mean_squared_error", FgsmConfig(epsilon=eps))
        for eps in (0.0, 0.2)
    ]
    rows = summary_rows(outcomes)
    assert len(rows) == 3
    assert all(len(row) == len(SUMMARY_COLUMNS) for row in rows)
    assert rows[-1][0] == "mean"
    assert float(rows[-1][3]) == pytest.approx(0.1)
    summary = summarize(outcomes)
    assert summary["n"] == 2
    assert summary["mean_perturbation_norm"] == pytest.approx(0.1)


def test_categorical_summary(classifier, classifier_dictionary):
    model = constant_classifier(classifier)
    outcome = craft_word_swap(model, [3, 1, 5, 7], classifier_dictionary, WordSwapConfig(max_changed_words=2))
    summary = summarize([outcome], categorical=True)
    assert summary["success_rate"] == 0.0
    assert summary["mean_changed_words"] == 2.0
    assert summary["mean_changed_fraction"] == 0.5
