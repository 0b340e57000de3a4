"""
Versioned binary model container.

Layout (little-endian):
    magic b"ADVSEQ\\0\\0" | uint16 version | uint8 architecture | uint8 flags | uint16 array count
    per array: uint8 ndim, ndim x uint32 dims
    float64 payload of every array, in the model's canonical array order

A `<file>.json` sidecar records architecture, dims, seed and training config.
"""
from pathlib import Path
from typing import Optional, Union

import numpy as np

from advseq import __version__
from advseq.sdk.exceptions import DatasetIOError, ModelFormatError
from advseq.sdk.logs import get_logger
from advseq.sdk.resources.base_models import Activation, TrainConfig
from advseq.sdk.resources.data import read_json, write_json
from advseq.sdk.resources.models import LstmClassifierParams, VanillaRnnParams


logger = get_logger(__name__)

MAGIC = b"ADVSEQ\x00\x00"
FORMAT_VERSION = 1
FLAG_IDENTITY_ACTIVATION = 0x01

ARCHITECTURES = {
    1: VanillaRnnParams,
    2: LstmClassifierParams,
}
ARCHITECTURE_NAMES = {
    VanillaRnnParams: "vanilla_rnn",
    LstmClassifierParams: "lstm_classifier",
}

HEADER = np.dtype([
    ("magic", "S8"),
    ("version", "<u2"),
    ("architecture", "u1"),
    ("flags", "u1"),
    ("count", "<u2"),
])

Model = Union[VanillaRnnParams, LstmClassifierParams]


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def _architecture_tag(model: Model) -> int:
    for tag, cls in ARCHITECTURES.items():
        if isinstance(model, cls):
            return tag
    raise ModelFormatError(f"Cannot serialize a {type(model).__name__}")


def _dims(model: Model) -> dict:
    if isinstance(model, VanillaRnnParams):
        return {"input_dim": model.input_dim, "hidden_dim": model.hidden_dim, "output_dim": model.output_dim}
    return {"vocab_size": model.vocab_size, "embed_dim": model.embed_dim, "hidden_dim": model.hidden_dim}


def encode_model(model: Model) -> bytes:
    """ Model parameters as container bytes. """
    arrays = model.arrays()
    flags = 0
    if isinstance(model, VanillaRnnParams) and model.activation == Activation.identity:
        flags |= FLAG_IDENTITY_ACTIVATION
    header = np.array([(MAGIC, FORMAT_VERSION, _architecture_tag(model), flags, len(arrays))], dtype=HEADER)
    chunks = [header.tobytes()]
    for array in arrays.values():
        chunks.append(np.array([array.ndim], dtype="u1").tobytes())
        chunks.append(np.array(array.shape, dtype="<u4").tobytes())
    chunks.extend(np.ascontiguousarray(array, dtype="<f8").tobytes() for array in arrays.values())
    return b"".join(chunks)


def decode_model(payload: bytes) -> Model:
    """
    Rebuild a model from container bytes.

    Raises:
        ModelFormatError: on a truncated, garbled or unknown container.
    """
    buffer = memoryview(payload)
    if len(buffer) < HEADER.itemsize:
        raise ModelFormatError("Model file is truncated (no header)")
    header = np.frombuffer(buffer[:HEADER.itemsize], dtype=HEADER)[0]
    if bytes(buffer[:len(MAGIC)]) != MAGIC:
        raise ModelFormatError("Not an advseq model file (bad magic)")
    if header["version"] != FORMAT_VERSION:
        raise ModelFormatError(f"Unsupported model format version {int(header['version'])}")
    cls = ARCHITECTURES.get(int(header["architecture"]))
    if cls is None:
        raise ModelFormatError(f"Unknown architecture tag {int(header['architecture'])}")
    names = cls.array_names()
    if int(header["count"]) != len(names):
        raise ModelFormatError(f"Expected {len(names)} arrays, found {int(header['count'])}")

    offset = HEADER.itemsize
    shapes = []
    try:
        for _ in names:
            ndim = int(np.frombuffer(buffer[offset:offset + 1], dtype="u1")[0])
            offset += 1
            dims = np.frombuffer(buffer[offset:offset + 4 * ndim], dtype="<u4")
            if dims.size != ndim:
                raise ValueError("truncated shape table")
            offset += 4 * ndim
            shapes.append(tuple(int(d) for d in dims))
        arrays = {}
        for name, shape in zip(names, shapes):
            size = int(np.prod(shape)) * 8
            chunk = buffer[offset:offset + size]
            if len(chunk) != size:
                raise ValueError(f"truncated payload for {name}")
            arrays[name] = np.frombuffer(chunk, dtype="<f8").reshape(shape).astype(np.float64)
            offset += size
    except (IndexError, ValueError) as exc:
        raise ModelFormatError(f"Model file is truncated or garbled - {exc}") from exc
    if offset != len(buffer):
        raise ModelFormatError(f"{len(buffer) - offset} trailing bytes after the payload")

    extra = {}
    if cls is VanillaRnnParams:
        identity = int(header["flags"]) & FLAG_IDENTITY_ACTIVATION
        extra["activation"] = Activation.identity if identity else Activation.tanh
    try:
        return cls(**arrays, **extra)
    except ValueError as exc:
        raise ModelFormatError(f"Model file holds inconsistent arrays - {exc}") from exc


def save_model(path, model: Model, seed: Optional[int] = None, train_config: Optional[TrainConfig] = None) -> Path:
    """
    Write a model container and its JSON sidecar.

    Raises:
        DatasetIOError: when the file cannot be written.

    Returns:
        Path of the model file.
    """
    path = Path(path)
    try:
        path.write_bytes(encode_model(model))
    except OSError as exc:
        raise DatasetIOError(f"Could not write {path} - {exc}") from exc
    write_json(sidecar_path(path), {
        "architecture": ARCHITECTURE_NAMES[type(model)],
        "artifact_version": __version__,
        "dims": _dims(model),
        "format_version": FORMAT_VERSION,
        "seed": seed,
        "train_config": train_config.dict() if train_config else None,
    })
    logger.info(f"Saved {ARCHITECTURE_NAMES[type(model)]} to {path}")
    return path


def load_model(path) -> Model:
    """
    Read a model container written by save_model.

    Raises:
        ModelFormatError: on a missing, truncated or garbled file.
    """
    path = Path(path)
    try:
        payload = path.read_bytes()
    except OSError as exc:
        raise ModelFormatError(f"Could not read model file {path} - {exc}") from exc
    return decode_model(payload)


def load_model_metadata(path) -> dict:
    """ The sidecar of a model file, or {} when there is none. """
    sidecar = sidecar_path(path)
    if not sidecar.exists():
        return {}
    return read_json(sidecar)
