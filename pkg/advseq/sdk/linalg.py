""" Dense vector/matrix helpers and the seeded random source used across advseq.

Vectors are 1-D float64 numpy arrays, matrices 2-D ones. Everything here is
float64; gradient checks at 1e-4 relative tolerance depend on it.
"""
import zlib
from typing import Tuple

import numpy as np

from advseq.sdk.exceptions import ParameterError, ShapeError


DTYPE = np.float64

SEED_MASK = (1 << 64) - 1

Vec = np.ndarray
Mat = np.ndarray


class Rng:
    """ Seeded random source with a platform independent stream (PCG64).

    Single-owner and mutable: every draw advances the stream. Independent
    streams are obtained with :meth:`derive`, keyed by a label, so that a new
    consumer never shifts the samples another consumer sees.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & SEED_MASK
        self._generator = np.random.Generator(np.random.PCG64(self.seed))

    def derive(self, label: str) -> "Rng":
        """ Return a fresh Rng whose seed depends only on (seed, label). """
        sequence = np.random.SeedSequence([self.seed, zlib.crc32(label.encode("utf-8"))])
        child_seed = int(sequence.generate_state(1, dtype=np.uint64)[0])
        return Rng(child_seed)

    def normal(self, mu: float, sigma: float, size) -> np.ndarray:
        return self._generator.normal(mu, sigma, size)

    def uniform(self, low: float, high: float, size) -> np.ndarray:
        return self._generator.uniform(low, high, size)

    def integers(self, low: int, high: int, size=None):
        """ Integers in [low, high). """
        return self._generator.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._generator.permutation(n)

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed})"


def as_vec(values) -> Vec:
    """ Coerce to a finite 1-D float64 vector. """
    vec = np.asarray(values, dtype=DTYPE)
    if vec.ndim != 1 or vec.size == 0:
        raise ShapeError("as_vec", vec.shape, ("n",))
    if not np.all(np.isfinite(vec)):
        raise ParameterError("Vector contains non-finite entries")
    return vec


def as_mat(values) -> Mat:
    """ Coerce to a finite 2-D float64 matrix. """
    mat = np.asarray(values, dtype=DTYPE)
    if mat.ndim != 2 or mat.size == 0:
        raise ShapeError("as_mat", mat.shape, ("rows", "cols"))
    if not np.all(np.isfinite(mat)):
        raise ParameterError("Matrix contains non-finite entries")
    return mat


def matvec(m: Mat, v: Vec) -> Vec:
    """
    Matrix-vector product.

    Args:
        m: (rows, cols) matrix.
        v: vector of length cols.

    Raises:
        ShapeError: when m.cols != v.dim.

    Returns:
        The vector m·v of length rows.
    """
    m = np.asarray(m, dtype=DTYPE)
    v = np.asarray(v, dtype=DTYPE)
    if m.ndim != 2 or v.ndim != 1 or m.shape[1] != v.shape[0]:
        raise ShapeError("matvec", m.shape, v.shape)
    return m @ v


def normal_sample(rng: Rng, mu: float, sigma2: float, n) -> np.ndarray:
    """
    Draw n samples from N(mu, sigma2).

    Args:
        rng: random source, advanced by the draw.
        mu: mean.
        sigma2: variance, must be >= 0.
        n: sample count or shape.

    Raises:
        ParameterError: when sigma2 < 0.

    Returns:
        Array of samples; every entry equals mu when sigma2 == 0.
    """
    if sigma2 < 0 or not np.isfinite(sigma2):
        raise ParameterError(f"sigma2 must be a finite non-negative number, got {sigma2}")
    if sigma2 == 0:
        return np.full(n, mu, dtype=DTYPE)
    return rng.normal(mu, np.sqrt(sigma2), n)


def uniform_matrix(rng: Rng, shape: Tuple[int, ...], scale: float) -> np.ndarray:
    """ Uniform(-scale, +scale) samples of the given shape. """
    if scale <= 0:
        raise ParameterError(f"init scale must be positive, got {scale}")
    return rng.uniform(-scale, scale, shape)


def tanh_vec(v) -> np.ndarray:
    return np.tanh(np.asarray(v, dtype=DTYPE))


def sigmoid_vec(v) -> np.ndarray:
    """ Logistic function written through tanh: exact 0.5 at 0 and no overflow. """
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(v, dtype=DTYPE)))


def softmax(v) -> np.ndarray:
    """ Softmax along the last axis with max subtraction. """
    v = np.asarray(v, dtype=DTYPE)
    if v.size == 0:
        raise ShapeError("softmax", v.shape, ("n>0",))
    shifted = v - np.max(v, axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / np.sum(exp, axis=-1, keepdims=True)


def log_softmax(v) -> np.ndarray:
    v = np.asarray(v, dtype=DTYPE)
    shifted = v - np.max(v, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def clip_by_norm(arrays, max_norm: float):
    """ Rescale a list of arrays so their joint L2 norm is at most max_norm. """
    total = np.sqrt(sum(float(np.sum(a * a)) for a in arrays))
    if total <= max_norm or total == 0.0:
        return arrays
    factor = max_norm / total
    return [a * factor for a in arrays]
