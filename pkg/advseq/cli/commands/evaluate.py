"""
    CLI command scoring a trained model.
"""
from typing import Optional

import click

from advseq.cli.display import handle_output, output_option
from advseq.cli.utils import (config_option, handle_errors, load_experiment,
                              report_header, seed_option, write_report)
from advseq.common.config import load_run_config, merge_config
from advseq.sdk.resources.training import evaluate


@click.command("eval")
@click.argument("model_path", type=click.Path())
@click.argument("data_dir", type=click.Path())
@click.option("--split", type=click.Choice(["train", "test"]), default=None,
              help="Corpus split to score a classifier on. [default: test when present]")
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None,
              help="Also write the metrics as a JSON report here.")
@seed_option
@config_option
@output_option
@handle_errors
def eval_(
    model_path: str,
    data_dir: str,
    split: Optional[str],
    report_path: Optional[str],
    seed: Optional[int],
    config_path: Optional[str],
    output: str,
):
    """
    Accuracy (classifier) or MSE (sequential model) on a dataset

        MODEL_PATH: model file written by `train`
        DATA_DIR: dataset directory

    \f
    Args:
        model_path: model file.
        data_dir: dataset directory.
        split: corpus split.
        report_path: optional JSON report path.
        seed: run seed (dictionary building for raw corpora).
        config_path: optional JSON run config.
        output: display format.
    """
    settings = merge_config({"seed": 0}, load_run_config(config_path, "eval"), {"seed": seed, "split": split})
    experiment = load_experiment(model_path, data_dir, settings["seed"])
    if experiment.is_classifier:
        split = settings.get("split") or ("test" if experiment.test is not None else "train")
        metrics = {"split": split, **evaluate(experiment.model, experiment.corpus(split))}
    else:
        metrics = evaluate(experiment.model, experiment.pairs)
    if report_path:
        write_report(report_path, report_header("eval", settings["seed"], settings, data_dir), {"metrics": metrics})
    handle_output({"model": model_path, **metrics}, output, "eval")
