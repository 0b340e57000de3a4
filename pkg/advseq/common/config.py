""" Run-config files: loading, schema validation and merging with command-line options. """
from pathlib import Path
from typing import Optional, Union

import yaml
from cerberus import Validator

from advseq.sdk.exceptions import ConfigurationError, InputError
from advseq.sdk.logs import get_logger


logger = get_logger(__name__)

SEED_SCHEMA = {"seed": {"type": "integer", "min": 0}}

TRAIN_SCHEMA = {
    **SEED_SCHEMA,
    "epochs": {"type": "integer", "min": 0},
    "learning_rate": {"type": "number", "min": 0},
    "init_scale": {"type": "number", "min": 0},
    "report_every": {"type": "integer", "min": 1},
    "batch_size": {"type": "integer", "min": 0},
    "hidden_dim": {"type": "integer", "min": 1},
    "clip_norm": {"type": "number", "min": 0, "nullable": True},
}

ATTACK_COMMON_SCHEMA = {
    **SEED_SCHEMA,
    "split": {"type": "string", "allowed": ["train", "test"]},
    "limit": {"type": "integer", "min": 1, "nullable": True},
    "correct_only": {"type": "boolean"},
}

TARGET_SCHEMA = {
    "step": {"type": "integer", "min": 0, "required": True},
    "coord": {"type": "integer", "min": 0, "required": True},
    "value": {"type": "number", "excludes": "direction"},
    "direction": {"type": "integer", "allowed": [-1, 1], "excludes": "value"},
    "current": {"type": "boolean"},
}

CONFIG_SCHEMAS = {
    "gen corpus": {
        **SEED_SCHEMA,
        "vocab_size": {"type": "integer", "min": 20},
        "embed_dim": {"type": "integer", "min": 1},
        "n_items": {"type": "integer", "min": 1},
        "n_test": {"type": "integer", "min": 0},
        "min_len": {"type": "integer", "min": 1},
        "max_len": {"type": "integer", "min": 1},
        "format": {"type": "string", "allowed": ["csv", "binary"]},
    },
    "gen seqpairs": {
        **SEED_SCHEMA,
        "n_pairs": {"type": "integer", "min": 1},
        "steps": {"type": "integer", "min": 1},
        "input_dim": {"type": "integer", "min": 1},
        "output_dim": {"type": "integer", "min": 1},
        "alpha": {"type": "number"},
        "input_sigma2": {"type": "number", "min": 0},
        "output_sigma2": {"type": "number", "min": 0},
    },
    "train sequential": TRAIN_SCHEMA,
    "train classifier": TRAIN_SCHEMA,
    "eval": {**SEED_SCHEMA, "split": {"type": "string", "allowed": ["train", "test"]}},
    "attack fgsm": {
        **ATTACK_COMMON_SCHEMA,
        "epsilon": {"type": "number", "min": 0},
        "embedded": {"type": "boolean"},
    },
    "attack wordswap": {
        **ATTACK_COMMON_SCHEMA,
        "max_changed_words": {"type": "integer", "min": 1, "nullable": True},
        "budget_fraction": {"type": "number", "min": 0, "max": 1},
    },
    "attack seqtarget": {
        **ATTACK_COMMON_SCHEMA,
        "targets": {"type": "list", "minlength": 1, "schema": {"type": "dict", "schema": TARGET_SCHEMA}},
        "delta": {"type": "number", "min": 0},
        "off_target_ratio": {"type": "number", "min": 1},
        "step_size": {"type": "number", "min": 0},
        "max_iters": {"type": "integer", "min": 1},
        "kappa": {"type": "number", "min": 0},
    },
    "jacobian": {
        **SEED_SCHEMA,
        "steps": {"type": "integer", "min": 1},
        "pair": {"type": "integer", "min": 0},
        "finite_diff": {"type": "boolean"},
        "h": {"type": "number", "min": 0},
    },
}


def load_run_config(config_path: Union[str, Path, None], command: str) -> dict:
    """
    Read and validate a run-config file for a command.

    The file is JSON (any YAML-compatible mapping parses). Keys outside the
    command's schema are rejected.

    Args:
        config_path: path of the file, or None for an empty config.
        command: schema key, e.g. "train sequential".

    Raises:
        InputError: when the file does not exist.
        ConfigurationError: on a parse error or a schema violation.

    Returns:
        The validated mapping.
    """
    if config_path is None:
        return {}
    if command not in CONFIG_SCHEMAS:
        raise ConfigurationError(f"No config schema for command {command!r}")

    config_path = Path(config_path)
    try:
        with open(config_path, "r", encoding="utf-8") as file:
            config = yaml.safe_load(file)
    except FileNotFoundError as exc:
        raise InputError(f"Config file {config_path} does not exist.") from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"Config file {config_path} does not parse - {exc}") from exc

    if config is None:
        config = {}
    if not isinstance(config, dict):
        raise ConfigurationError(f"Config file {config_path} must hold a mapping")

    validator = Validator(CONFIG_SCHEMAS[command])
    if not validator.validate(config):
        raise ConfigurationError(f"Config file {config_path} is invalid: {validator.errors}")
    logger.info(f"Loaded {command} config from {config_path}")
    return config


def merge_config(defaults: dict, file_config: Optional[dict], options: dict) -> dict:
    """ defaults < config file < command-line options that were actually given (not None). """
    merged = {**defaults, **(file_config or {})}
    merged.update({key: value for key, value in options.items() if value is not None})
    return merged
