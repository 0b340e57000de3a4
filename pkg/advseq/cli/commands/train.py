"""
    CLI commands training the two architectures.
"""
from pathlib import Path
from typing import Optional

import click

from advseq.cli.display import handle_output, output_option
from advseq.cli.utils import (config_option, ensure_directory, handle_errors,
                              pick, plain, report_header, seed_option,
                              write_report)
from advseq.common.config import load_run_config, merge_config
from advseq.sdk.exceptions import InputError
from advseq.sdk.linalg import Rng
from advseq.sdk.resources.base_models import TrainConfig
from advseq.sdk.resources.data import (DICTIONARY_FILE, dataset_kind,
                                       load_corpus_dataset, load_pairs_dataset,
                                       write_dictionary)
from advseq.sdk.resources.serialization import save_model
from advseq.sdk.resources.training import (train_classifier, train_sequential,
                                           write_loss_curve)


MODEL_FILE = "model.bin"
REPORT_FILE = "report.json"
LOSS_CURVE_FILE = "loss_curve.csv"


def train_options(function):
    """ Options shared by both trainers; unset ones fall back to config, then defaults. """
    for option in reversed([
        click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False),
                     help="Directory for the model, its report and loss curve."),
        click.option("--epochs", type=int, default=None, help="Training epochs."),
        click.option("--learning-rate", "--lr", "learning_rate", type=float, default=None, help="Step size."),
        click.option("--hidden-dim", type=int, default=None, help="Hidden state width."),
        click.option("--batch-size", type=int, default=None, help="Examples per step, 0 = full batch."),
        click.option("--init-scale", type=float, default=None, help="Half-width of the uniform weight init."),
        click.option("--report-every", type=int, default=None, help="Epochs between progress log lines."),
        click.option("--clip-norm", type=float, default=None, help="Clip the joint gradient norm at this value."),
        seed_option,
        config_option,
        output_option,
    ]):
        function = option(function)
    return function


def _settings(command: str, seed, config_path, options) -> dict:
    settings = merge_config({"seed": 0}, load_run_config(config_path, command), {"seed": seed, **options})
    return pick(settings, TrainConfig.__fields__)


def _require_kind(data_dir: str, kind: str) -> None:
    found = dataset_kind(data_dir)
    if found != kind:
        raise InputError(f"{data_dir} holds a {found} dataset; this model trains on {kind} data")


def _finish(command: str, cfg: TrainConfig, data_dir: str, out: Path, model, report, output: str) -> None:
    model_path = save_model(out / MODEL_FILE, model, seed=cfg.seed, train_config=cfg)
    write_loss_curve(out / LOSS_CURVE_FILE, report)
    write_report(out / REPORT_FILE, report_header(command, cfg.seed, plain(cfg), data_dir),
                 {"train_report": report.persisted()})
    handle_output({**plain(report), "model": str(model_path)}, output, "train")


@click.group("train")
def commands():
    """
    Train a model on a generated dataset
    """


@commands.command("sequential")
@click.argument("data_dir", type=click.Path())
@train_options
@handle_errors
def sequential(data_dir: str, out_dir: str, seed: Optional[int], config_path: Optional[str], output: str, **options):
    """
    Vanilla RNN on sequence pairs (squared error)

        DATA_DIR: directory written by `gen seqpairs`

    \f
    Args:
        data_dir: pair dataset directory.
        out_dir: output directory.
        seed: run seed.
        config_path: optional JSON run config.
        output: display format.
        options: TrainConfig overrides.
    """
    cfg = TrainConfig.sequential_defaults(**_settings("train sequential", seed, config_path, options))
    _require_kind(data_dir, "seqpairs")
    pairs = load_pairs_dataset(data_dir)
    model, report = train_sequential(pairs, cfg)
    _finish("train sequential", cfg, data_dir, ensure_directory(out_dir), model, report, output)


@commands.command("classifier")
@click.argument("data_dir", type=click.Path())
@train_options
@handle_errors
def classifier(data_dir: str, out_dir: str, seed: Optional[int], config_path: Optional[str], output: str, **options):
    """
    LSTM review classifier on a labelled corpus (cross-entropy)

        DATA_DIR: directory with train.tsv (and dictionary.txt from `gen corpus`)

    The dictionary, with the trained embeddings, is written next to the model.

    \f
    Args:
        data_dir: corpus directory.
        out_dir: output directory.
        seed: run seed.
        config_path: optional JSON run config.
        output: display format.
        options: TrainConfig overrides.
    """
    cfg = TrainConfig.classifier_defaults(**_settings("train classifier", seed, config_path, options))
    _require_kind(data_dir, "corpus")
    dictionary, train, _ = load_corpus_dataset(data_dir, rng=Rng(cfg.seed).derive("corpus"))
    model, report = train_classifier(train, cfg, dictionary)
    out = ensure_directory(out_dir)
    write_dictionary(out / DICTIONARY_FILE, dictionary.with_vectors(model.embedding))
    _finish("train classifier", cfg, data_dir, out, model, report, output)


if __name__ == "__main__":
    commands()  # pylint: disable=E1120
