import json

import pytest

from advseq.common.config import load_run_config, merge_config
from advseq.sdk.exceptions import ConfigurationError, InputError


def write_config(fs, data, path="/runs/config.json"):
    fs.create_file(path, contents=data if isinstance(data, str) else json.dumps(data))
    return path


def test_no_config_file():
    assert load_run_config(None, "train sequential") == {}


def test_valid_config(fs):
    path = write_config(fs, {"epochs": 3, "learning_rate": 0.01, "clip_norm": None})
    assert load_run_config(path, "train sequential") == {"epochs": 3, "learning_rate": 0.01, "clip_norm": None}


def test_empty_config_file(fs):
    assert load_run_config(write_config(fs, ""), "eval") == {}


@pytest.mark.parametrize("data", [
    {"epochs": 3, "momentum": 0.9},
    {"epochs": -1},
    {"learning_rate": "fast"},
    "[1, 2]",
    "{epochs: [1,",
])
def test_invalid_config(fs, data):
    with pytest.raises(ConfigurationError):
        load_run_config(write_config(fs, data), "train sequential")


def test_target_config(fs):
    good = {"targets": [{"step": 5, "coord": 0, "direction": 1}, {"step": 8, "coord": 2, "value": 0.5}]}
    assert load_run_config(write_config(fs, good), "attack seqtarget") == good
    both = {"targets": [{"step": 5, "coord": 0, "direction": 1, "value": 0.5}]}
    with pytest.raises(ConfigurationError):
        load_run_config(write_config(fs, both, "/runs/both.json"), "attack seqtarget")


def test_missing_config_file(fs):
    with pytest.raises(InputError):
        load_run_config("/runs/absent.json", "eval")


def test_unknown_command(fs):
    with pytest.raises(ConfigurationError):
        load_run_config(write_config(fs, {}), "deploy")


def test_precedence():
    merged = merge_config({"seed": 0, "epochs": 400}, {"epochs": 10, "seed": 3}, {"epochs": 2, "seed": None})
    assert merged == {"seed": 3, "epochs": 2}
    assert merge_config({"seed": 0}, None, {}) == {"seed": 0}
