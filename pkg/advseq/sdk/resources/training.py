"""
Gradient-descent training for the sequential RNN and the review classifier.

Both trainers are plain (momentum-free) gradient descent with parameter
gradients from backpropagation through the unfolded graph. Randomness comes
from the run seed only: weights from the "init" stream, batch order from the
"shuffle" stream, so equal (config, seed, dataset) give bitwise-equal params.
"""
import math
import time
from typing import Dict, Optional, Tuple, Union

import numpy as np

from advseq.sdk.exceptions import (ConfigurationError, InputError,
                                   TrainingDivergedError)
from advseq.sdk.linalg import Rng, clip_by_norm
from advseq.sdk.logs import get_logger
from advseq.sdk.progress import start_progress_bar
from advseq.sdk.resources.base_models import (LossKind, ModelKind,
                                              TrainConfig, TrainReport)
from advseq.sdk.resources.data import (EmbeddingDictionary, LabeledCorpus,
                                       SeqPairSet, write_csv)
from advseq.sdk.resources.diff import (classifier_param_gradients,
                                       rnn_backward)
from advseq.sdk.resources.losses import CrossEntropy, MeanSquaredError
from advseq.sdk.resources.models import (LstmClassifierParams,
                                         VanillaRnnParams, class_of_logits,
                                         lstm_classify, rnn_forward)


logger = get_logger(__name__)

DEFAULT_EMBED_DIM = 16


def _batches(rng: Rng, n: int, batch_size: int):
    order = rng.permutation(n)
    size = n if batch_size == 0 else batch_size
    for start in range(0, n, size):
        yield order[start:start + size]


def _step(arrays: Dict[str, np.ndarray], grads: Dict[str, np.ndarray], cfg: TrainConfig) -> Dict[str, np.ndarray]:
    names = list(arrays)
    updates = [grads[name] for name in names]
    if cfg.clip_norm is not None:
        updates = clip_by_norm(updates, cfg.clip_norm)
    return {name: arrays[name] - cfg.learning_rate * update for name, update in zip(names, updates)}


def _check_finite(epoch: int, loss: float, arrays: Dict[str, np.ndarray]) -> None:
    if math.isfinite(loss) and all(np.all(np.isfinite(a)) for a in arrays.values()):
        return
    logger.error(f"Training diverged at epoch {epoch} (loss {loss})")
    raise TrainingDivergedError(epoch, loss)


def _log_epoch(cfg: TrainConfig, epoch: int, loss: float) -> None:
    if epoch % cfg.report_every == 0 or epoch == cfg.epochs:
        logger.info(f"epoch {epoch}/{cfg.epochs} loss {loss:.6g}")


def sequential_mse(p: VanillaRnnParams, pairs: SeqPairSet) -> float:
    """ Mean squared error over every pair, step and output coordinate. """
    return MeanSquaredError().value(rnn_forward(p, pairs.inputs).outputs, pairs.outputs)


def train_sequential(pairs: SeqPairSet, cfg: Optional[TrainConfig] = None) -> Tuple[VanillaRnnParams, TrainReport]:
    """
    Fit a vanilla RNN to input/output sequence pairs.

    Each batch minimizes the squared error summed over steps and coordinates,
    averaged over the batch; batch_size 0 means full batch. The reported
    metric and every loss-curve point are mean squared errors over all
    elements; a curve point averages the batches of its epoch, each measured
    before its update.

    Args:
        pairs: training pairs.
        cfg: training settings, TrainConfig.sequential_defaults() when omitted.

    Raises:
        InputError: on an empty pair set.
        TrainingDivergedError: when the loss or a parameter stops being finite.

    Returns:
        (trained params, TrainReport)
    """
    cfg = cfg or TrainConfig.sequential_defaults()
    if cfg.loss != LossKind.mean_squared_error:
        raise ConfigurationError("The sequential model trains on mean_squared_error only")
    if len(pairs) == 0:
        raise InputError("No training pairs")
    rng = Rng(cfg.seed)
    p = VanillaRnnParams.initialize(
        rng.derive("init"), pairs.inputs.shape[2], cfg.hidden_dim, pairs.outputs.shape[2], cfg.init_scale
    )
    shuffle_rng = rng.derive("shuffle")
    steps, output_dim = pairs.outputs.shape[1:]
    objective = MeanSquaredError(scale=steps * output_dim)

    started = time.perf_counter()
    initial = sequential_mse(p, pairs)
    arrays = p.arrays()
    curve = []
    progress = start_progress_bar(cfg.epochs, "Training", unit="epoch")
    try:
        for epoch in range(1, cfg.epochs + 1):
            total = 0.0
            for batch in _batches(shuffle_rng, len(pairs), cfg.batch_size):
                current = VanillaRnnParams.construct(**arrays, activation=p.activation)
                x, y = pairs.inputs[batch], pairs.outputs[batch]
                trace = rnn_forward(current, x)
                loss = objective.value(trace.outputs, y)
                grads = rnn_backward(current, x, trace, objective.gradient(trace.outputs, y)).params
                arrays = _step(arrays, grads, cfg)
                total += loss * len(batch)
            epoch_loss = total / (len(pairs) * objective.scale)
            _check_finite(epoch, epoch_loss, arrays)
            curve.append(epoch_loss)
            _log_epoch(cfg, epoch, epoch_loss)
            progress.update()
            progress.set_postfix(loss=f"{epoch_loss:.4g}")
    finally:
        progress.close()

    p = p.replace(**arrays)
    report = TrainReport(
        model_kind=ModelKind.sequential,
        metric_name="mse",
        initial_metric=initial,
        final_metric=sequential_mse(p, pairs),
        loss_curve=curve,
        epochs_run=cfg.epochs,
        wall_clock=time.perf_counter() - started,
    )
    return p, report


def classifier_accuracy(p: LstmClassifierParams, corpus: LabeledCorpus) -> float:
    correct = sum(class_of_logits(lstm_classify(p, tokens).logits) == label for tokens, label in corpus.items())
    return correct / len(corpus)


def train_classifier(
    corpus: LabeledCorpus,
    cfg: Optional[TrainConfig] = None,
    dictionary: Optional[EmbeddingDictionary] = None,
) -> Tuple[LstmClassifierParams, TrainReport]:
    """
    Fit the LSTM classifier, embeddings included, with minibatch descent on
    batch-mean cross-entropy.

    Args:
        corpus: labelled token sequences.
        cfg: training settings, TrainConfig.classifier_defaults() when omitted.
        dictionary: starting embeddings; without one they are sampled and
            the vocabulary is sized from the largest token id.

    Raises:
        InputError: on an empty corpus.
        TrainingDivergedError: when the loss or a parameter stops being finite.

    Returns:
        (trained params, TrainReport with train accuracy as the metric)
    """
    cfg = cfg or TrainConfig.classifier_defaults()
    if cfg.loss != LossKind.cross_entropy:
        raise ConfigurationError("The classifier trains on cross_entropy only")
    if len(corpus) == 0:
        raise InputError("No training sentences")
    rng = Rng(cfg.seed)
    init_rng = rng.derive("init")
    if dictionary is not None:
        p = LstmClassifierParams.initialize(
            init_rng, dictionary.vocab_size, dictionary.embed_dim, cfg.hidden_dim, cfg.init_scale,
            embedding=dictionary.vectors,
        )
    else:
        vocab_size = max(2, max(int(tokens.max()) for tokens in corpus.sequences) + 1)
        p = LstmClassifierParams.initialize(init_rng, vocab_size, DEFAULT_EMBED_DIM, cfg.hidden_dim, cfg.init_scale)
    shuffle_rng = rng.derive("shuffle")

    started = time.perf_counter()
    initial = classifier_accuracy(p, corpus)
    arrays = p.arrays()
    curve = []
    progress = start_progress_bar(cfg.epochs, "Training", unit="epoch")
    try:
        for epoch in range(1, cfg.epochs + 1):
            total = 0.0
            for batch in _batches(shuffle_rng, len(corpus), cfg.batch_size):
                current = LstmClassifierParams.construct(**arrays)
                objective = CrossEntropy(scale=1.0 / len(batch))
                grads = {name: np.zeros_like(a) for name, a in arrays.items()}
                for index in batch:
                    tokens, label = corpus.sequences[index], corpus.labels[index]
                    trace = lstm_classify(current, tokens)
                    total += objective.value(trace.logits, label) * len(batch)
                    sentence = classifier_param_gradients(
                        current, tokens, trace, objective.gradient(trace.logits, label)
                    )
                    for name, grad in sentence.items():
                        grads[name] += grad
                arrays = _step(arrays, grads, cfg)
            epoch_loss = total / len(corpus)
            _check_finite(epoch, epoch_loss, arrays)
            curve.append(epoch_loss)
            _log_epoch(cfg, epoch, epoch_loss)
            progress.update()
            progress.set_postfix(loss=f"{epoch_loss:.4g}")
    finally:
        progress.close()

    p = p.replace(**arrays)
    report = TrainReport(
        model_kind=ModelKind.classifier,
        metric_name="accuracy",
        initial_metric=initial,
        final_metric=classifier_accuracy(p, corpus),
        loss_curve=curve,
        epochs_run=cfg.epochs,
        wall_clock=time.perf_counter() - started,
    )
    return p, report


def evaluate(model: Union[VanillaRnnParams, LstmClassifierParams], dataset: Union[SeqPairSet, LabeledCorpus]) -> dict:
    """
    Score a model on a matching dataset.

    Raises:
        ConfigurationError: when the model kind and dataset kind do not match.

    Returns:
        {"mse", "n"} for a sequential model, {"accuracy", "n"} for a classifier.
    """
    if isinstance(model, VanillaRnnParams) and isinstance(dataset, SeqPairSet):
        return {"mse": sequential_mse(model, dataset), "n": len(dataset)}
    if isinstance(model, LstmClassifierParams) and isinstance(dataset, LabeledCorpus):
        return {"accuracy": classifier_accuracy(model, dataset), "n": len(dataset)}
    raise ConfigurationError(
        f"Cannot evaluate a {type(model).__name__} on a {type(dataset).__name__}"
    )


def write_loss_curve(path, report: TrainReport) -> None:
    """ epoch,loss CSV (1-based epochs). """
    write_csv(path, ["epoch", "loss"], [[epoch, repr(loss)] for epoch, loss in enumerate(report.loss_curve, start=1)])
