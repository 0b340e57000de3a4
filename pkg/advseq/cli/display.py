""" Rendering command results as tables, JSON or YAML. """

import json
import sys
from datetime import timedelta
from enum import Enum, unique
from typing import List, Optional, Union

import click
import humanize
import yaml
from pygments import formatters, highlight, lexers
from tabulate import tabulate


CONFIG_DISPLAY_TABLE = {
    "headers": "keys",
    "tablefmt": "plain",
    "floatfmt": ".6g",
}

# control what columns are displayed and in what order here
DISPLAY_COLUMNS = {
    "gen": ["kind", "directory", "files", "dataset_hash"],
    "train": ["model_kind", "metric_name", "initial_metric", "final_metric", "epochs_run", "wall_clock", "model"],
    "eval": ["model", "split", "accuracy", "mse", "n"],
    "jacobian": ["model", "input", "method", "shape", "csv"],
    "attack": [
        "attack", "n", "success_rate", "mean_changed_words", "mean_changed_fraction",
        "mean_perturbation_norm", "mean_iterations", "reduction_rate",
    ],
}

# control what columns are renamed as here
KEY_MAPS = {
    "model_kind": "MODEL",
    "metric_name": "METRIC",
    "initial_metric": "INITIAL",
    "final_metric": "FINAL",
    "epochs_run": "EPOCHS",
    "wall_clock": "TIME",
    "success_rate": "SUCCESS RATE",
    "mean_changed_words": "WORDS CHANGED",
    "mean_changed_fraction": "FRACTION CHANGED",
    "mean_perturbation_norm": "PERTURBATION",
    "mean_iterations": "ITERATIONS",
    "reduction_rate": "SWAPS REDUCING",
    "dataset_hash": "HASH",
}

PYGMENTS_FORMATTER = formatters.TerminalFormatter()


@unique
class OutputFormat(str, Enum):
    """ Enumeration of available CLI output options. """
    table = "table"
    json = "json"
    yaml = "yaml"


def output_option(function):
    """ click decorator for specifying output format. """
    function = click.option(
        "--output",
        "-o",
        type=click.Choice([fmt.value for fmt in OutputFormat]),
        default=OutputFormat.table.value,
        help="The format to display the result in."
    )(function)
    return function


def format_duration(seconds: float) -> str:
    """ Human-readable wall-clock duration, e.g. "3 seconds". """
    return humanize.naturaldelta(timedelta(seconds=seconds), minimum_unit="milliseconds")


def format_display_data(data: Union[list, dict], view: Optional[str] = None) -> List[dict]:
    """Returns a list of dicts of display rows.

    Args:
        data: A result dict or a list of them.
        view: Key of DISPLAY_COLUMNS selecting and ordering the columns.

    Returns:
        List[dict]: rows with renamed keys and empty columns dropped.
    """
    if not data:
        return []
    if isinstance(data, dict):
        data = [data]

    columns = DISPLAY_COLUMNS.get(view)
    rows = []
    for obj in data:
        keys = [key for key in columns if key in obj] if columns else list(obj)
        row = {}
        for key in keys:
            value = obj[key]
            if value is None or value == "":
                continue
            if key == "wall_clock":
                value = format_duration(value)
            elif isinstance(value, (list, tuple)):
                value = ", ".join(str(item) for item in value)
            row[KEY_MAPS.get(key) or key.upper()] = value
        rows.append(row)
    return rows


def table(data: Union[list, dict], view: Optional[str] = None):
    click.echo(tabulate(format_display_data(data, view), **CONFIG_DISPLAY_TABLE))


def handle_output(data: Union[list, dict], output: str, view: Optional[str] = None):
    """Handles outputting data.

    Args:
        data (Union[list, dict]): JSON-ready data to output.
        output (str): The output format, one of 'table', 'json', or 'yaml'.
        view (str): Which DISPLAY_COLUMNS entry to use for tables.
    """
    if output == OutputFormat.table:
        table(data, view)
    elif output == OutputFormat.json:
        text = json.dumps(data, indent=4, sort_keys=True)
        if sys.stdout.isatty():
            text = highlight(text, lexers.JsonLexer(), PYGMENTS_FORMATTER)
        click.echo(text)
    elif output == OutputFormat.yaml:
        text = yaml.safe_dump(data, sort_keys=True)
        if sys.stdout.isatty():
            text = highlight(text, lexers.YamlLexer(), PYGMENTS_FORMATTER)
        click.echo(text)
