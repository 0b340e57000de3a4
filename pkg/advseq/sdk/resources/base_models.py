# pylint: disable=C0326,E0213
""" Base models to use with resource modules. """
import math
from enum import Enum, unique
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, root_validator, validator

from advseq.sdk.linalg import DTYPE


@unique
class Activation(str, Enum):
    """ Hidden-state squashing of the vanilla RNN. identity gives a linear network. """
    tanh = "tanh"
    identity = "identity"


@unique
class LossKind(str, Enum):
    """ Losses the training module can optimize. """
    mean_squared_error = "mean_squared_error"
    cross_entropy = "cross_entropy"


@unique
class ModelKind(str, Enum):
    """ The two trainable architectures. """
    sequential = "sequential"
    classifier = "classifier"


def _frozen_array(values, ndim: int, name: str) -> np.ndarray:
    array = np.array(values, dtype=DTYPE, copy=True)
    if array.ndim != ndim or array.size == 0:
        raise ValueError(f"{name} must be a non-empty {ndim}-D array, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} contains non-finite entries")
    array.setflags(write=False)
    return array


class ArrayModel(BaseModel):
    """ Immutable pydantic model holding float64 arrays. """

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False
        extra = "forbid"

    _matrices = ()
    _vectors = ()

    @root_validator(pre=True)
    def _coerce_arrays(cls, values):
        for name in cls._matrices:
            if name in values:
                values[name] = _frozen_array(values[name], 2, name)
        for name in cls._vectors:
            if name in values:
                values[name] = _frozen_array(values[name], 1, name)
        return values

    def arrays(self) -> Dict[str, np.ndarray]:
        """ Parameter arrays in their canonical (serialization) order. """
        return {name: getattr(self, name) for name in self.array_names()}

    @classmethod
    def array_names(cls) -> Tuple[str, ...]:
        return tuple(name for name in cls.__fields__ if name in cls._matrices + cls._vectors)


class VanillaRnnParamsBase(ArrayModel):
    """ Defines the vanilla sequential RNN's parameters. """

    w_in:               np.ndarray      # hidden_dim x input_dim
    w:                  np.ndarray      # hidden_dim x hidden_dim
    w_out:              np.ndarray      # output_dim x hidden_dim
    b_h:                np.ndarray      # hidden_dim
    b_y:                np.ndarray      # output_dim
    activation:         Activation = Activation.tanh

    _matrices = ("w_in", "w", "w_out")
    _vectors = ("b_h", "b_y")

    @root_validator(skip_on_failure=True)
    def _check_shapes(cls, values):
        hidden = values["w_in"].shape[0]
        if values["w"].shape != (hidden, hidden):
            raise ValueError(f"w must be {hidden}x{hidden}, got {values['w'].shape}")
        if values["w_out"].shape[1] != hidden:
            raise ValueError(f"w_out must have {hidden} columns, got {values['w_out'].shape}")
        if values["b_h"].shape != (hidden,):
            raise ValueError(f"b_h must have length {hidden}, got {values['b_h'].shape}")
        if values["b_y"].shape != (values["w_out"].shape[0],):
            raise ValueError(f"b_y must have length {values['w_out'].shape[0]}, got {values['b_y'].shape}")
        return values


LSTM_GATES = ("input", "forget", "output", "candidate")


class LstmClassifierParamsBase(ArrayModel):
    """ Defines the LSTM review classifier's parameters (binary softmax head). """

    embedding:          np.ndarray      # vocab_size x embed_dim
    w_input:            np.ndarray      # hidden_dim x (embed_dim + hidden_dim)
    w_forget:           np.ndarray
    w_output:           np.ndarray
    w_candidate:        np.ndarray
    b_input:            np.ndarray      # hidden_dim
    b_forget:           np.ndarray
    b_output:           np.ndarray
    b_candidate:        np.ndarray
    w_softmax:          np.ndarray      # 2 x hidden_dim
    b_softmax:          np.ndarray      # 2

    _matrices = ("embedding", "w_input", "w_forget", "w_output", "w_candidate", "w_softmax")
    _vectors = ("b_input", "b_forget", "b_output", "b_candidate", "b_softmax")

    @root_validator(skip_on_failure=True)
    def _check_shapes(cls, values):
        vocab_size, embed_dim = values["embedding"].shape
        if vocab_size < 2:
            raise ValueError(f"vocab_size must be >= 2, got {vocab_size}")
        hidden = values["w_input"].shape[0]
        for gate in LSTM_GATES:
            if values[f"w_{gate}"].shape != (hidden, embed_dim + hidden):
                raise ValueError(
                    f"w_{gate} must be {hidden}x{embed_dim + hidden}, got {values[f'w_{gate}'].shape}"
                )
            if values[f"b_{gate}"].shape != (hidden,):
                raise ValueError(f"b_{gate} must have length {hidden}")
        if values["w_softmax"].shape != (2, hidden):
            raise ValueError(f"w_softmax must be 2x{hidden}, got {values['w_softmax'].shape}")
        if values["b_softmax"].shape != (2,):
            raise ValueError("b_softmax must have length 2")
        return values


class TrainConfig(BaseModel):
    """ Gradient-descent settings shared by both trainers. """

    epochs:             int = Field(400, ge=0)
    learning_rate:      float = Field(1e-3, gt=0)
    loss:               LossKind = LossKind.mean_squared_error
    seed:               int = Field(0, ge=0)
    init_scale:         float = Field(0.1, gt=0)
    report_every:       int = Field(50, ge=1)
    batch_size:         int = Field(1, ge=0)       # 0 = full batch
    hidden_dim:         int = Field(16, ge=1)
    clip_norm:          Optional[float] = Field(None, gt=0)

    class Config:
        extra = "forbid"

    @validator("learning_rate", "init_scale")
    def _finite(cls, value):
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value

    @classmethod
    def sequential_defaults(cls, **overrides) -> "TrainConfig":
        return cls(**{"hidden_dim": 16, "epochs": 400, "learning_rate": 1e-3,
                      "loss": LossKind.mean_squared_error, "batch_size": 1, **overrides})

    @classmethod
    def classifier_defaults(cls, **overrides) -> "TrainConfig":
        return cls(**{"hidden_dim": 32, "epochs": 200, "learning_rate": 0.5,
                      "loss": LossKind.cross_entropy, "batch_size": 16,
                      "report_every": 20, **overrides})


class TrainReport(BaseModel):
    """ Outcome of a training run. """

    model_kind:         ModelKind
    metric_name:        str
    initial_metric:     float
    final_metric:       float
    loss_curve:         List[float] = []
    epochs_run:         int = 0
    wall_clock:         float = 0.0

    @validator("loss_curve", each_item=True)
    def _finite_loss(cls, value):
        if not math.isfinite(value):
            raise ValueError("loss curve entries must be finite")
        return value

    def persisted(self) -> dict:
        """ JSON-ready dict; wall-clock is left out so reports are reproducible. """
        return self.dict(exclude={"wall_clock"})


class FgsmConfig(BaseModel):
    """ Fast gradient sign settings. """

    epsilon:            float = Field(0.1, ge=0)

    class Config:
        extra = "forbid"

    @validator("epsilon")
    def _finite(cls, value):
        if not math.isfinite(value):
            raise ValueError("epsilon must be finite")
        return value


class WordSwapConfig(BaseModel):
    """ Budget of the categorical word-swap attack. Positions are visited by saliency. """

    max_changed_words:  Optional[int] = Field(None, ge=1)
    budget_fraction:    float = Field(0.25, gt=0, le=1)

    class Config:
        extra = "forbid"

    def budget(self, length: int) -> int:
        """ Number of words that may change in a sentence of this length. """
        if self.max_changed_words is not None:
            return min(self.max_changed_words, length)
        return min(length, max(1, math.floor(self.budget_fraction * length)))


class SequentialTarget(BaseModel):
    """ One targeted output component: a desired value or a direction. Steps are 0-based. """

    step:               int = Field(..., ge=0)
    coord:              int = Field(..., ge=0)
    value:              Optional[float] = None
    direction:          Optional[int] = None

    class Config:
        extra = "forbid"

    @root_validator(skip_on_failure=True)
    def _value_or_direction(cls, values):
        has_value = values.get("value") is not None
        has_direction = values.get("direction") is not None
        if has_value == has_direction:
            raise ValueError("exactly one of value or direction must be given")
        if has_direction and values["direction"] not in (-1, 1):
            raise ValueError("direction must be +1 or -1")
        if has_value and not math.isfinite(values["value"]):
            raise ValueError("target value must be finite")
        return values


class SequentialAttackConfig(BaseModel):
    """ Settings of the Jacobian-guided step-targeting attack. """

    targets:            List[SequentialTarget] = Field(..., min_items=1)
    delta:              float = Field(0.05, gt=0)
    off_target_ratio:   float = Field(2.0, ge=1)
    step_size:          float = Field(0.05, gt=0)
    max_iters:          int = Field(50, ge=1)
    kappa:              float = Field(1e-12, gt=0)

    class Config:
        extra = "forbid"


class SwapDecision(BaseModel):
    """ One replacement made by the word-swap attack. """

    position:           int
    old_token:          int
    new_token:          int
    current_class:      int
    logit_before:       float
    logit_after:        float

    @property
    def reduced(self) -> bool:
        return self.logit_after < self.logit_before


class AttackOutcome(BaseModel):
    """ Adversarial input plus perturbation accounting. """

    original:           np.ndarray
    adversarial:        np.ndarray
    success:            bool
    changed_positions:  List = []
    perturbation_norm:  float = 0.0
    iterations:         int = 0
    original_class:     Optional[int] = None
    adversarial_class:  Optional[int] = None
    output_delta:       Optional[np.ndarray] = None
    decisions:          List[SwapDecision] = []
    diagnostic:         Optional[str] = None

    class Config:
        arbitrary_types_allowed = True

    def report(self) -> dict:
        """ JSON-ready dict of the outcome. """
        data = self.dict(exclude={"original", "adversarial", "output_delta", "decisions"})
        data["original"] = self.original.tolist()
        data["adversarial"] = self.adversarial.tolist()
        if self.output_delta is not None:
            data["output_delta"] = self.output_delta.tolist()
        if self.decisions:
            data["decisions"] = [
                {**decision.dict(), "reduced": decision.reduced} for decision in self.decisions
            ]
        return data


class CorpusConfig(BaseModel):
    """ Synthetic review corpus generator settings. """

    vocab_size:         int = Field(500, ge=20)
    embed_dim:          int = Field(16, ge=1)
    n_items:            int = Field(200, ge=1)
    n_test:             int = Field(50, ge=0)
    min_len:            int = Field(8, ge=1)
    max_len:            int = Field(20, ge=1)

    class Config:
        extra = "forbid"

    @root_validator(skip_on_failure=True)
    def _len_range(cls, values):
        if values["min_len"] > values["max_len"]:
            raise ValueError("min_len must not exceed max_len")
        return values

    @property
    def len_range(self) -> Tuple[int, int]:
        return self.min_len, self.max_len


class SeqPairConfig(BaseModel):
    """ Correlated input/output sequence generator settings. """

    n_pairs:            int = Field(100, ge=1)
    steps:              int = Field(10, ge=1)
    input_dim:          int = Field(5, ge=1)
    output_dim:         int = Field(3, ge=1)
    alpha:              float = 1.0
    input_sigma2:       float = Field(1.0, ge=0)
    output_sigma2:      float = Field(1e-4, ge=0)

    class Config:
        extra = "forbid"

    @root_validator(skip_on_failure=True)
    def _enough_sources(cls, values):
        if values["output_dim"] > values["input_dim"]:
            raise ValueError("output_dim must not exceed input_dim (one distinct source per output)")
        return values


class CorrelationLink(BaseModel):
    """ output[j][coord] += alpha * input[j - lag][source] """

    coord:              int
    source:             int
    lag:                int
    alpha:              float
