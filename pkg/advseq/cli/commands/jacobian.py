"""
    CLI command dumping an input-output Jacobian as CSV.
"""
from typing import Optional

import click
import numpy as np

from advseq.cli.display import handle_output, output_option
from advseq.cli.utils import (config_option, handle_errors, load_experiment,
                              seed_option)
from advseq.common.config import load_run_config, merge_config
from advseq.sdk.exceptions import ConfigurationError, InputError
from advseq.sdk.linalg import Rng
from advseq.sdk.progress import start_spinner
from advseq.sdk.resources.data import write_csv
from advseq.sdk.resources.diff import (FINITE_DIFF_STEP, JacobianTensor,
                                       embedded_logit_jacobian,
                                       finite_diff_jacobian, rnn_jacobian)
from advseq.sdk.resources.models import (LstmClassifierParams,
                                         lstm_forward_embedded, rnn_forward)
from advseq.sdk.resources.serialization import load_model


def jacobian_csv_rows(tensor: JacobianTensor):
    """ Header and rows of the CSV layout: rows x{i}[{a}], columns y{j}[{b}]. """
    t_in, t_out, out_dim, in_dim = tensor.blocks.shape
    header = [""] + [f"y{j}[{b}]" for j in range(t_out) for b in range(out_dim)]
    matrix = tensor.to_matrix()
    labels = [f"x{i}[{a}]" for i in range(t_in) for a in range(in_dim)]
    rows = [[label] + [repr(float(value)) for value in row] for label, row in zip(labels, matrix)]
    return header, rows


def compute_jacobian(model, x: np.ndarray, finite_diff: bool = False, h: float = FINITE_DIFF_STEP) -> JacobianTensor:
    """
    Jacobian of a model at a continuous input.

    A classifier is differentiated with respect to the embedded sentence; its
    two logits form a single output step.
    """
    if isinstance(model, LstmClassifierParams):
        if finite_diff:
            return finite_diff_jacobian(lambda e: lstm_forward_embedded(model, e).logits, x, h)
        gradients = embedded_logit_jacobian(model, x).gradients
        return JacobianTensor(blocks=gradients[:, np.newaxis, :, :])
    if finite_diff:
        return finite_diff_jacobian(lambda seq: rnn_forward(model, seq).outputs, x, h)
    return rnn_jacobian(model, x)


def _input(model_path: str, data_dir: Optional[str], item: Optional[int], steps: Optional[int], settings: dict):
    """ (model, continuous input, description of where it came from). """
    if data_dir is not None:
        experiment = load_experiment(model_path, data_dir, settings["seed"])
        index = item or 0
        if experiment.is_classifier:
            corpus = experiment.corpus("train")
            if index >= len(corpus):
                raise InputError(f"Item {index} is out of range; the corpus has {len(corpus)} sentences")
            return experiment.model, experiment.model.embedding[corpus.sequences[index]], f"{data_dir}#{index}"
        if index >= len(experiment.pairs):
            raise InputError(f"Pair {index} is out of range; the dataset has {len(experiment.pairs)} pairs")
        return experiment.model, experiment.pairs.inputs[index], f"{data_dir}#{index}"

    if not steps:
        raise ConfigurationError("Give either --data (with --pair) or --steps")
    model = load_model(model_path)
    width = model.embed_dim if isinstance(model, LstmClassifierParams) else model.input_dim
    x = Rng(settings["seed"]).derive("jacobian-input").normal(0.0, 1.0, (steps, width))
    return model, x, f"random ({steps} steps)"


@click.command("jacobian")
@click.argument("model_path", type=click.Path())
@click.option("--data", "data_dir", type=click.Path(file_okay=False), default=None,
              help="Dataset to take the input from.")
@click.option("--pair", "--item", "item", type=click.IntRange(min=0), default=None,
              help="Index of the pair (or training sentence) in --data. [default: 0]")
@click.option("--steps", type=click.IntRange(min=1), default=None,
              help="Use a seeded random input of this many steps instead of --data.")
@click.option("--finite-diff", is_flag=True, default=None, help="Central differences instead of the exact Jacobian.")
@click.option("--h", type=float, default=None, help="Finite difference step. [default: 1e-5]")
@click.option("--out", "out_csv", required=True, type=click.Path(dir_okay=False), help="CSV file to write.")
@seed_option
@config_option
@output_option
@handle_errors
def jacobian(model_path: str, data_dir: Optional[str], item: Optional[int], steps: Optional[int],
             finite_diff: Optional[bool], h: Optional[float], out_csv: str, seed: Optional[int],
             config_path: Optional[str], output: str):
    """
    Dump the input-output Jacobian of a model as CSV

        MODEL_PATH: model file written by `train`

    Rows are input step and coordinate (x{i}[{a}]), columns output step and
    coordinate (y{j}[{b}]). Blocks with input step after output step are zero.

    \f
    Args:
        model_path: model file.
        data_dir: optional dataset directory.
        item: pair or sentence index in data_dir.
        steps: length of a random input when no data_dir is given.
        finite_diff: use the central-difference oracle.
        h: finite difference step.
        out_csv: output CSV path.
        seed: run seed.
        config_path: optional JSON run config.
        output: display format.
    """
    settings = merge_config(
        {"seed": 0, "finite_diff": False, "h": FINITE_DIFF_STEP},
        load_run_config(config_path, "jacobian"),
        {"seed": seed, "steps": steps, "pair": item, "finite_diff": finite_diff, "h": h},
    )
    model, x, source = _input(model_path, data_dir, settings.get("pair"), settings.get("steps"), settings)

    spinner = start_spinner("Computing Jacobian")
    try:
        tensor = compute_jacobian(model, x, settings["finite_diff"], settings["h"])
    finally:
        spinner.close()

    header, rows = jacobian_csv_rows(tensor)
    write_csv(out_csv, header, rows)
    t_in, t_out, out_dim, in_dim = tensor.blocks.shape
    handle_output(
        {
            "model": model_path,
            "input": source,
            "method": "finite_diff" if settings["finite_diff"] else "exact",
            "shape": [t_in, t_out, out_dim, in_dim],
            "csv": out_csv,
        },
        output, "jacobian",
    )
