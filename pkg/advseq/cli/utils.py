""" Reusable classes, decorators and report helpers for the click commands. """
import functools
import json
import sys
from dataclasses import dataclass
from gettext import gettext as _
from pathlib import Path
from typing import Dict, List, Optional, Union

import click
from click import Command, Context
from click.formatting import HelpFormatter
from pydantic import BaseModel, ValidationError

from advseq import __version__
from advseq.cli.terminal_format import error
from advseq.sdk.exceptions import (EXIT_IO, EXIT_NUMERIC, EXIT_USAGE,
                                   AdvseqError, ConfigurationError,
                                   InputError)
from advseq.sdk.linalg import Rng
from advseq.sdk.resources.data import (DICTIONARY_FILE, EmbeddingDictionary,
                                       LabeledCorpus, SeqPairSet, dataset_hash,
                                       dataset_kind, load_corpus_dataset,
                                       load_pairs_dataset, read_dictionary,
                                       write_json)
from advseq.sdk.resources.models import LstmClassifierParams, VanillaRnnParams
from advseq.sdk.resources.serialization import load_model


class CustomGroup(click.Group):
    """ click group with prefix matching and grouped, ordered help.

    Differences from click.Group:
        Resolves a unique command prefix ("adv tr" -> "adv train").
        Lists commands under named sections, ordered by priority then name.
            Example: cli.add_command(cmd, command_group="Experiments", priority=2)
    """

    def __init__(self, *args, **kwargs):
        # {section: {command name: priority}}
        self.command_priority = {}
        super().__init__(*args, **kwargs)

    def get_command(self, ctx: Context, command_name: str) -> Optional[Command]:
        """
        Exact match first, then the single command starting with command_name.

        Args:
            ctx: CLI context information.
            command_name: Name or prefix typed by the user.

        Returns:
            Command, or None when nothing matches; fails when the prefix is ambiguous.
        """
        command = click.Group.get_command(self, ctx, command_name)
        if command is not None:
            return command

        matches = [name for name in self.list_commands(ctx) if name.startswith(command_name)]
        if not matches:
            return None
        if len(matches) == 1:
            return click.Group.get_command(self, ctx, matches[0])
        ctx.fail(f"Too many command matches: {', '.join(sorted(matches))}. Try using one of these commands.")
        return None

    def format_commands_extra(self, ctx: Context, formatter: HelpFormatter) -> None:
        """ Write one help section per command group. Replaces click's format_commands. """
        sections = {}
        for section in sorted(self.command_priority, reverse=True):
            priorities = self.command_priority[section]
            rows = []
            for name in sorted(priorities, key=lambda name: (priorities[name], name)):
                command = super().get_command(ctx, name)
                if command is None or command.hidden:
                    continue
                rows.append((name, command.get_short_help_str()))
            if rows:
                sections[section] = rows

        if not sections:
            return
        width = max(len(name) for rows in sections.values() for name, _help in rows)
        for section, rows in sections.items():
            spacing = width - max(len(name) for name, _help in rows) + 2
            with formatter.section(_(section)):
                formatter.write_dl(rows, col_spacing=spacing)

    def get_help(self, ctx: Context) -> str:
        self.format_commands = self.format_commands_extra
        return super().get_help(ctx)

    def update_command_priority(self, priority: int, command_group: str, command_name: str) -> None:
        self.command_priority.setdefault(command_group, {})[command_name] = priority

    def add_command(self, command: Command, name: str = None, **kwargs) -> None:
        """Registers command to the group.

        Args:
            command: Command to add.
            name: Name to override command with.
            kwargs: priority and/or command_group.
        """
        super().add_command(command, name)
        self.update_command_priority(
            kwargs.pop("priority", 1), kwargs.pop("command_group", "Commands"), name or command.name
        )


def handle_errors(function):
    """
    Turn library exceptions into an error message and the process exit code:
    2 usage/config/input, 3 filesystem, 4 numeric failure.
    """
    @functools.wraps(function)
    def wrapper(*args, **kwargs):
        try:
            return function(*args, **kwargs)
        except AdvseqError as exc:
            error(str(exc))
            sys.exit(exc.exit_code)
        except ValidationError as exc:
            error(f"Invalid configuration:\n{exc}")
            sys.exit(EXIT_USAGE)
        except FloatingPointError as exc:
            error(f"Numeric failure - {exc}")
            sys.exit(EXIT_NUMERIC)
        except OSError as exc:
            error(f"I/O failure - {exc}")
            sys.exit(EXIT_IO)
    return wrapper


def seed_option(function):
    return click.option(
        "--seed", type=int, default=None,
        help="Seed every random stream derives from (default: config file, else 0).",
    )(function)


def config_option(function):
    return click.option(
        "--config", "config_path", type=click.Path(dir_okay=False), default=None,
        help="JSON run-config file; command-line options take precedence.",
    )(function)


def jobs_option(function):
    return click.option(
        "--jobs", type=click.IntRange(min=1), default=1, show_default=True,
        help="Worker processes for independent inputs.",
    )(function)


def report_header(command: str, seed: int, config: dict, data_dir=None) -> dict:
    """ Header embedded in every written report. """
    return {
        "artifact_version": __version__,
        "command": command,
        "config": config,
        "dataset_hash": dataset_hash(data_dir) if data_dir is not None else None,
        "seed": seed,
    }


def write_report(path, header: dict, body: dict) -> Path:
    path = Path(path)
    write_json(path, {**header, **body})
    return path


def ensure_directory(path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def names(paths: List[Path]) -> List[str]:
    return [Path(path).name for path in paths]


def pick(settings: Dict, keys) -> Dict:
    """ Sub-dict of the given keys that are present. """
    return {key: settings[key] for key in keys if key in settings}


def plain(model: BaseModel) -> dict:
    """ JSON/YAML-safe dict of a pydantic model (enums as their values). """
    return json.loads(model.json())


@dataclass
class Experiment:
    """ A loaded model plus the dataset it is evaluated or attacked on. """
    model: Union[VanillaRnnParams, LstmClassifierParams]
    pairs: Optional[SeqPairSet] = None
    dictionary: Optional[EmbeddingDictionary] = None
    train: Optional[LabeledCorpus] = None
    test: Optional[LabeledCorpus] = None

    @property
    def is_classifier(self) -> bool:
        return isinstance(self.model, LstmClassifierParams)

    def corpus(self, split: str) -> LabeledCorpus:
        corpus = self.test if split == "test" else self.train
        if corpus is None:
            raise InputError(f"The dataset has no {split} split")
        return corpus


def load_experiment(model_path, data_dir, seed: int = 0) -> Experiment:
    """
    Load a model and a dataset of the matching kind.

    A classifier tokenizes with the dictionary saved next to it when there is
    one, so a dictionary built while training on a real corpus is reused.

    Raises:
        ConfigurationError: when the model and dataset kinds or widths do not match.
    """
    model = load_model(model_path)
    kind = dataset_kind(data_dir)
    if isinstance(model, VanillaRnnParams):
        if kind != "seqpairs":
            raise ConfigurationError(f"A sequential model needs a seqpairs dataset, {data_dir} is a {kind} dataset")
        pairs = load_pairs_dataset(data_dir)
        widths = (pairs.inputs.shape[2], pairs.outputs.shape[2])
        if widths != (model.input_dim, model.output_dim):
            raise ConfigurationError(
                f"The model maps {model.input_dim} inputs to {model.output_dim} outputs per step; "
                f"{data_dir} pairs are {widths[0]} to {widths[1]}"
            )
        return Experiment(model=model, pairs=pairs)
    if kind != "corpus":
        raise ConfigurationError(f"A classifier needs a corpus dataset, {data_dir} is a {kind} dataset")
    saved = Path(model_path).parent / DICTIONARY_FILE
    dictionary = read_dictionary(saved) if saved.is_file() else None
    dictionary, train, test = load_corpus_dataset(data_dir, rng=Rng(seed).derive("corpus"), dictionary=dictionary)
    if (dictionary.vocab_size, dictionary.embed_dim) != (model.vocab_size, model.embed_dim):
        raise ConfigurationError(
            f"The classifier embeds {model.vocab_size} words in {model.embed_dim} dimensions; "
            f"the dictionary for {data_dir} has {dictionary.vocab_size} words in {dictionary.embed_dim}"
        )
    return Experiment(model=model, dictionary=dictionary, train=train, test=test)
