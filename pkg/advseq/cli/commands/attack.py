"""
    CLI commands crafting adversarial sequences against a trained model.

Each command writes <out>/inputs/input_NNNN.json per attacked input,
<out>/summary.csv (one row per input plus a mean row) and <out>/summary.json.
"""
from functools import partial
from typing import List, Optional, Tuple

import click
import numpy as np

from advseq.cli.display import handle_output, output_option
from advseq.cli.utils import (Experiment, config_option, ensure_directory,
                              handle_errors, jobs_option, load_experiment,
                              pick, plain, report_header, seed_option,
                              write_report)
from advseq.common.config import load_run_config, merge_config
from advseq.sdk.exceptions import ConfigurationError, UnsupportedInputError
from advseq.sdk.resources.attacks import (SUMMARY_COLUMNS, attack_many,
                                          audit_swap_decisions,
                                          craft_sequential, craft_word_swap,
                                          fgsm, summarize, summary_rows)
from advseq.sdk.resources.base_models import (FgsmConfig, LossKind,
                                              SequentialAttackConfig,
                                              WordSwapConfig)
from advseq.sdk.resources.data import detokenize, write_csv
from advseq.sdk.resources.models import predict_class, rnn_forward


INPUTS_DIR = "inputs"
SUMMARY_CSV = "summary.csv"
SUMMARY_JSON = "summary.json"

DEFAULT_TARGETS = [
    {"step": 5, "coord": 0, "direction": 1},
    {"step": 8, "coord": 2, "direction": 1},
]


def attack_options(function):
    """ Arguments and options shared by every attack. """
    for option in reversed([
        click.argument("model_path", type=click.Path()),
        click.argument("data_dir", type=click.Path()),
        click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False),
                     help="Directory for per-input reports and the summary."),
        click.option("--split", type=click.Choice(["train", "test"]), default=None,
                     help="Corpus split to attack. [default: train]"),
        click.option("--limit", type=click.IntRange(min=1), default=None, help="Attack at most this many inputs."),
        click.option("--correct-only/--all", "correct_only", default=None,
                     help="Classifier: skip sentences the model already gets wrong. [default: correct-only]"),
        jobs_option,
        seed_option,
        config_option,
        output_option,
    ]):
        function = option(function)
    return function


def _settings(command: str, seed, config_path, options: dict) -> dict:
    return merge_config(
        {"seed": 0, "split": "train", "correct_only": True, "limit": None},
        load_run_config(config_path, command),
        {"seed": seed, **options},
    )


def _sentences(experiment: Experiment, settings: dict) -> Tuple[List[int], List[np.ndarray], List[int]]:
    """ (dataset indices, token sequences, labels) selected for attack. """
    corpus = experiment.corpus(settings["split"])
    selected = []
    for index, (tokens, label) in enumerate(corpus.items()):
        if settings["correct_only"] and predict_class(experiment.model, tokens) != label:
            continue
        selected.append(index)
        if settings["limit"] and len(selected) == settings["limit"]:
            break
    return selected, [corpus.sequences[i] for i in selected], [corpus.labels[i] for i in selected]


def _pairs(experiment: Experiment, settings: dict) -> List[int]:
    count = len(experiment.pairs)
    return list(range(min(count, settings["limit"] or count)))


def _write_outputs(command: str, settings: dict, data_dir: str, out_dir: str,
                   indices: List[int], outcomes, extras: Optional[List[dict]] = None,
                   categorical: bool = False) -> dict:
    out = ensure_directory(out_dir)
    inputs = ensure_directory(out / INPUTS_DIR)
    header = report_header(command, settings["seed"], settings, data_dir)
    for position, (index, outcome) in enumerate(zip(indices, outcomes)):
        body = {"index": index, "outcome": outcome.report(), **(extras[position] if extras else {})}
        write_report(inputs / f"input_{position:04d}.json", header, body)
    write_csv(out / SUMMARY_CSV, SUMMARY_COLUMNS, summary_rows(outcomes))
    summary = {"attack": command.split()[-1], **summarize(outcomes, categorical=categorical)}
    if categorical:
        summary["audit"] = audit_swap_decisions(outcomes)
    write_report(out / SUMMARY_JSON, header, {"summary": summary})
    return summary


def fgsm_pair(model, cfg: FgsmConfig, item):
    x, y = item
    return fgsm(model, x, y, LossKind.mean_squared_error, cfg)


def fgsm_sentence(model, cfg: FgsmConfig, item):
    tokens, label = item
    return fgsm(model, model.embedding[tokens], label, LossKind.cross_entropy, cfg)


def word_swap_sentence(model, dictionary, cfg: WordSwapConfig, tokens):
    return craft_word_swap(model, tokens, dictionary, cfg)


def resolve_targets(targets: List[dict], outputs: np.ndarray) -> List[dict]:
    """ Replace `current` targets by the model's present output value. """
    resolved = []
    for target in targets:
        target = dict(target)
        if target.pop("current", False):
            if target["step"] >= outputs.shape[0] or target["coord"] >= outputs.shape[1]:
                raise ConfigurationError(f"Target (step {target['step']}, coord {target['coord']}) is out of range")
            target["value"] = float(outputs[target["step"], target["coord"]])
        resolved.append(target)
    return resolved


def sequential_pair(model, targets: List[dict], settings: dict, x):
    cfg = SequentialAttackConfig(targets=resolve_targets(targets, rnn_forward(model, x).outputs), **settings)
    return craft_sequential(model, x, cfg)


def parse_target(_ctx, _param, values) -> Optional[List[dict]]:
    """ click callback for STEP:COORD:(VALUE|+|-|current), 0-based step and coordinate. """
    if not values:
        return None
    targets = []
    for text in values:
        parts = text.split(":")
        try:
            if len(parts) != 3:
                raise ValueError("expected STEP:COORD:SPEC")
            target = {"step": int(parts[0]), "coord": int(parts[1])}
            spec = parts[2].strip()
            if spec == "current":
                target["current"] = True
            elif spec in ("+", "-"):
                target["direction"] = 1 if spec == "+" else -1
            else:
                target["value"] = float(spec)
        except ValueError as exc:
            raise click.BadParameter(f"{text!r}: {exc}") from exc
        targets.append(target)
    return targets


@click.group("attack")
def commands():
    """
    Craft adversarial inputs against a trained model
    """


@commands.command("fgsm")
@attack_options
@click.option("--epsilon", type=float, default=None, help="Infinity-norm of the perturbation. [default: 0.1]")
@click.option("--embedded", is_flag=True, default=None,
              help="Classifier only: perturb the sentence embeddings instead of failing on token input.")
@handle_errors
def fgsm_command(model_path: str, data_dir: str, out_dir: str, jobs: int, seed: Optional[int],
                 config_path: Optional[str], output: str, **options):
    """
    Fast gradient sign method

    Sequential models are attacked on each input sequence (success: the
    squared error grows). A classifier reads token ids, which FGSM cannot
    perturb; with --embedded each sentence's embedding matrix is attacked
    instead (success: the predicted class flips).

    \f
    Args:
        model_path: model file.
        data_dir: dataset directory.
        out_dir: report directory.
        jobs: worker processes.
        seed: run seed.
        config_path: optional JSON run config.
        output: display format.
        options: split, limit, correct_only, embedded and FgsmConfig overrides.
    """
    settings = _settings("attack fgsm", seed, config_path, options)
    settings.setdefault("embedded", False)
    cfg = FgsmConfig(**pick(settings, FgsmConfig.__fields__))
    experiment = load_experiment(model_path, data_dir, settings["seed"])
    if experiment.is_classifier:
        if not settings["embedded"]:
            raise UnsupportedInputError(
                "FGSM perturbs continuous inputs and a classifier reads token ids; "
                "use `attack wordswap`, or pass --embedded to attack the sentence embeddings"
            )
        indices, sequences, labels = _sentences(experiment, settings)
        items = list(zip(sequences, labels))
        worker = partial(fgsm_sentence, experiment.model, cfg)
    else:
        indices = _pairs(experiment, settings)
        items = [(experiment.pairs.inputs[i], experiment.pairs.outputs[i]) for i in indices]
        worker = partial(fgsm_pair, experiment.model, cfg)
    outcomes = attack_many(worker, items, jobs)
    summary = _write_outputs("attack fgsm", {**settings, **plain(cfg)}, data_dir, out_dir, indices, outcomes)
    handle_output(summary, output, "attack")


@commands.command("wordswap")
@attack_options
@click.option("--max-changed-words", type=int, default=None,
              help="Word budget per sentence. [default: 25% of its length]")
@click.option("--budget-fraction", type=float, default=None,
              help="Budget as a fraction of sentence length when no word budget is set. [default: 0.25]")
@handle_errors
def wordswap(model_path: str, data_dir: str, out_dir: str, jobs: int, seed: Optional[int],
             config_path: Optional[str], output: str, **options):
    """
    Jacobian-guided word replacement until the class flips

    \f
    Args:
        model_path: classifier model file.
        data_dir: corpus directory.
        out_dir: report directory.
        jobs: worker processes.
        seed: run seed.
        config_path: optional JSON run config.
        output: display format.
        options: split, limit, correct_only and WordSwapConfig overrides.
    """
    settings = _settings("attack wordswap", seed, config_path, options)
    cfg = WordSwapConfig(**pick(settings, WordSwapConfig.__fields__))
    experiment = load_experiment(model_path, data_dir, settings["seed"])
    if not experiment.is_classifier:
        raise ConfigurationError("wordswap attacks token sequences; it needs a classifier model and a corpus")
    indices, sequences, labels = _sentences(experiment, settings)
    worker = partial(word_swap_sentence, experiment.model, experiment.dictionary, cfg)
    outcomes = attack_many(worker, sequences, jobs)
    extras = [
        {
            "label": label,
            "original_text": detokenize(outcome.original, experiment.dictionary),
            "adversarial_text": detokenize(outcome.adversarial, experiment.dictionary),
        }
        for outcome, label in zip(outcomes, labels)
    ]
    summary = _write_outputs("attack wordswap", {**settings, **plain(cfg)}, data_dir, out_dir, indices,
                             outcomes, extras, categorical=True)
    handle_output({**summary, "reduction_rate": summary["audit"]["reduction_rate"]}, output, "attack")


@commands.command("seqtarget")
@attack_options
@click.option("--target", "targets", multiple=True, callback=parse_target,
              help="STEP:COORD:(VALUE|+|-|current), 0-based; repeatable. [default: 5:0:+ and 8:2:+]")
@click.option("--delta", type=float, default=None, help="Acceptance margin. [default: 0.05]")
@click.option("--off-target-ratio", type=float, default=None, help="Selectivity threshold. [default: 2.0]")
@click.option("--step-size", type=float, default=None, help="Per-iteration coordinate move. [default: 0.05]")
@click.option("--max-iters", type=int, default=None, help="Iteration budget. [default: 50]")
@handle_errors
def seqtarget(model_path: str, data_dir: str, out_dir: str, jobs: int, seed: Optional[int],
              config_path: Optional[str], output: str, **options):
    """
    Move chosen output steps of a sequential model, leaving the others alone

    \f
    Args:
        model_path: sequential model file.
        data_dir: pair dataset directory.
        out_dir: report directory.
        jobs: worker processes.
        seed: run seed.
        config_path: optional JSON run config.
        output: display format.
        options: split, limit, targets and SequentialAttackConfig overrides.
    """
    settings = _settings("attack seqtarget", seed, config_path, options)
    targets = settings.get("targets") or DEFAULT_TARGETS
    settings["targets"] = targets
    attack_settings = pick(settings, [name for name in SequentialAttackConfig.__fields__ if name != "targets"])
    experiment = load_experiment(model_path, data_dir, settings["seed"])
    if experiment.is_classifier:
        raise ConfigurationError("seqtarget needs a sequential model and a seqpairs dataset")
    # fail on a malformed or out-of-range target before any work is dispatched
    steps, width = experiment.pairs.outputs.shape[1:]
    for target in targets:
        if target["step"] >= steps or target["coord"] >= width:
            raise ConfigurationError(
                f"Target (step {target['step']}, coord {target['coord']}) outside a {steps}x{width} output"
            )
    SequentialAttackConfig(targets=resolve_targets(targets, np.zeros((steps, width))), **attack_settings)
    indices = _pairs(experiment, settings)
    worker = partial(sequential_pair, experiment.model, targets, attack_settings)
    outcomes = attack_many(worker, [experiment.pairs.inputs[i] for i in indices], jobs)
    summary = _write_outputs("attack seqtarget", settings, data_dir, out_dir, indices, outcomes)
    handle_output(summary, output, "attack")


if __name__ == "__main__":
    commands()  # pylint: disable=E1120
