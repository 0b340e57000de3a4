""" Training/attack costs and their gradients with respect to the model output. """
import numpy as np

from advseq.sdk.exceptions import ConfigurationError, ShapeError
from advseq.sdk.linalg import DTYPE, log_softmax, softmax
from advseq.sdk.resources.base_models import LossKind


class MeanSquaredError:
    """ scale · mean((y - y_true)²) over every step and coordinate. """
    kind = LossKind.mean_squared_error

    def __init__(self, scale: float = 1.0):
        self.scale = scale

    @staticmethod
    def _check(predicted, target):
        predicted = np.asarray(predicted, dtype=DTYPE)
        target = np.asarray(target, dtype=DTYPE)
        if predicted.shape != target.shape:
            raise ShapeError("mean_squared_error", predicted.shape, target.shape)
        return predicted, target

    def value(self, predicted, target) -> float:
        predicted, target = self._check(predicted, target)
        return self.scale * float(np.mean((predicted - target) ** 2))

    def gradient(self, predicted, target) -> np.ndarray:
        predicted, target = self._check(predicted, target)
        return self.scale * 2.0 * (predicted - target) / predicted.size


class CrossEntropy:
    """ scale · -log softmax(logits)[label] for a single labelled example. """
    kind = LossKind.cross_entropy

    def __init__(self, scale: float = 1.0):
        self.scale = scale

    @staticmethod
    def _check(logits, label):
        logits = np.asarray(logits, dtype=DTYPE)
        if logits.ndim != 1:
            raise ShapeError("cross_entropy", logits.shape, ("classes",))
        label = int(label)
        if not 0 <= label < logits.shape[0]:
            raise ShapeError("cross_entropy", logits.shape, (label,))
        return logits, label

    def value(self, logits, label) -> float:
        logits, label = self._check(logits, label)
        return -self.scale * float(log_softmax(logits)[label])

    def gradient(self, logits, label) -> np.ndarray:
        logits, label = self._check(logits, label)
        grad = softmax(logits)
        grad[label] -= 1.0
        return self.scale * grad


def get_loss(kind, scale: float = 1.0):
    """ Loss object for a LossKind (or its string value). """
    try:
        kind = LossKind(kind)
    except ValueError as exc:
        raise ConfigurationError(f"Unknown loss {kind!r}") from exc
    if kind == LossKind.mean_squared_error:
        return MeanSquaredError(scale)
    return CrossEntropy(scale)
