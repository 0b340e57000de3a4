import numpy as np
import pytest

from advseq.sdk.exceptions import ModelFormatError
from advseq.sdk.resources.base_models import Activation, TrainConfig
from advseq.sdk.resources.serialization import (HEADER, decode_model,
                                                encode_model, load_model,
                                                load_model_metadata,
                                                save_model, sidecar_path)

from conftest import make_classifier, make_vanilla


@pytest.mark.parametrize("model", [make_vanilla(), make_vanilla(activation="identity"), make_classifier()],
                         ids=["vanilla", "identity", "classifier"])
def test_container_is_bit_exact(model):
    payload = encode_model(model)
    decoded = decode_model(payload)
    assert type(decoded) is type(model)
    for name, array in model.arrays().items():
        assert getattr(decoded, name).tobytes() == array.tobytes()
    assert encode_model(decoded) == payload


def test_identity_activation_survives(tmp_path):
    model = make_vanilla(activation="identity")
    save_model(tmp_path / "model.bin", model)
    assert load_model(tmp_path / "model.bin").activation == Activation.identity


def test_sidecar(tmp_path):
    save_model(tmp_path / "model.bin", make_classifier(), seed=7, train_config=TrainConfig.classifier_defaults())
    assert sidecar_path(tmp_path / "model.bin").name == "model.bin.json"
    metadata = load_model_metadata(tmp_path / "model.bin")
    assert metadata["architecture"] == "lstm_classifier"
    assert metadata["dims"] == {"vocab_size": 12, "embed_dim": 3, "hidden_dim": 4}
    assert metadata["seed"] == 7
    assert metadata["train_config"]["loss"] == "cross_entropy"
    assert load_model_metadata(tmp_path / "other.bin") == {}


def corrupt(payload: bytes, offset: int, value: int) -> bytes:
    data = bytearray(payload)
    data[offset] = value
    return bytes(data)


@pytest.mark.parametrize("mangle", [
    lambda payload: payload[:5],
    lambda payload: payload[:-3],
    lambda payload: payload + b"\x00",
    lambda payload: b"NOTMODEL" + payload[8:],
    lambda payload: corrupt(payload, 8, 2),                  # format version
    lambda payload: corrupt(payload, 10, 9),                 # architecture
    lambda payload: corrupt(payload, 12, 3),                 # array count
    lambda payload: payload[:HEADER.itemsize + 2],
], ids=["no-header", "truncated", "trailing", "magic", "version", "architecture", "count", "shape-table"])
def test_garbled_container(mangle):
    with pytest.raises(ModelFormatError):
        decode_model(mangle(encode_model(make_vanilla())))


def test_inconsistent_arrays():
    model = make_vanilla()
    payload = bytearray(encode_model(model))
    # the first array is w_in (4 x 3); claim it is 3 x 4 instead
    offset = HEADER.itemsize + 1
    payload[offset:offset + 8] = np.array([3, 4], dtype="<u4").tobytes()
    with pytest.raises(ModelFormatError):
        decode_model(bytes(payload))


def test_missing_model_file(tmp_path):
    with pytest.raises(ModelFormatError):
        load_model(tmp_path / "absent.bin")
