import csv
import json

import click
import numpy as np
import pytest
from click.testing import CliRunner

from advseq import __version__
from advseq.cli import cli
from advseq.cli.commands.attack import parse_target, resolve_targets


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args):
    result = runner.invoke(cli, [str(arg) for arg in args])
    return result


def invoke_json(runner, *args):
    result = invoke(runner, *args, "-o", "json")
    assert result.exit_code == 0, result.output
    return json.loads(result.output)


@pytest.fixture
def sequential_run(runner, tmp_path):
    """ (data dir, model path) of a tiny seqpairs experiment. """
    data, out = tmp_path / "pairs", tmp_path / "seq-model"
    invoke_json(runner, "gen", "seqpairs", "--out", data, "--n-pairs", 6, "--steps", 4,
                "--input-dim", 3, "--output-dim", 2)
    invoke_json(runner, "train", "sequential", data, "--out", out, "--epochs", 2, "--hidden-dim", 4)
    return data, out / "model.bin"


@pytest.fixture
def classifier_run(runner, tmp_path):
    data, out = tmp_path / "corpus", tmp_path / "clf-model"
    invoke_json(runner, "gen", "corpus", "--out", data, "--vocab-size", 40, "--embed-dim", 4,
                "--n-items", 12, "--n-test", 4, "--min-len", 4, "--max-len", 6)
    invoke_json(runner, "train", "classifier", data, "--out", out, "--epochs", 2, "--hidden-dim", 4)
    return data, out / "model.bin"


def test_version(runner):
    result = invoke(runner, "--version")
    assert result.exit_code == 0
    assert __version__ in result.output


def test_help_groups_commands(runner):
    result = invoke(runner, "--help")
    assert result.exit_code == 0
    assert "Experiments" in result.output
    assert "Attacks" in result.output


def test_command_prefix(runner):
    result = invoke(runner, "jac", "--help")
    assert result.exit_code == 0
    assert "--finite-diff" in result.output


def test_gen_seqpairs(runner, tmp_path):
    shown = invoke_json(runner, "gen", "seqpairs", "--out", tmp_path / "d", "--n-pairs", 3, "--steps", 4)
    assert shown["kind"] == "seqpairs"
    assert sorted(shown["files"]) == ["metadata.json", "pairs.csv"]
    assert len(shown["dataset_hash"]) == 40


def test_gen_reruns_are_byte_identical(runner, tmp_path):
    for name in ("a", "b"):
        invoke_json(runner, "gen", "corpus", "--out", tmp_path / "corpus" / name, "--vocab-size", 30,
                    "--n-items", 6, "--n-test", 2, "--seed", 11)
        invoke_json(runner, "gen", "seqpairs", "--out", tmp_path / "pairs" / name, "--n-pairs", 5, "--seed", 11)
    for kind, files in (("corpus", ["dictionary.txt", "metadata.json", "test.tsv", "train.tsv"]),
                        ("pairs", ["metadata.json", "pairs.csv"])):
        for filename in files:
            first = (tmp_path / kind / "a" / filename).read_bytes()
            assert first == (tmp_path / kind / "b" / filename).read_bytes()


def test_gen_corpus_binary_dictionary(runner, tmp_path):
    shown = invoke_json(runner, "gen", "corpus", "--out", tmp_path / "d", "--vocab-size", 20,
                        "--n-items", 4, "--n-test", 0, "--format", "binary")
    assert sorted(shown["files"]) == ["dictionary.txt", "metadata.json", "train.tsv"]
    assert (tmp_path / "d" / "dictionary.txt").read_bytes().startswith(b"20 16 binary\n")


def test_train_writes_model_and_report(sequential_run):
    data, model = sequential_run
    report = json.loads((model.parent / "report.json").read_text(encoding="utf-8"))
    assert set(report) >= {"artifact_version", "command", "config", "dataset_hash", "seed", "train_report"}
    assert report["command"] == "train sequential"
    assert report["train_report"]["epochs_run"] == 2
    assert (model.parent / "model.bin.json").exists()
    assert (model.parent / "loss_curve.csv").read_text(encoding="utf-8").startswith("epoch,loss\n")


def test_training_is_reproducible(runner, tmp_path):
    outputs = []
    for name in ("a", "b"):
        data = tmp_path / f"data-{name}"
        invoke_json(runner, "gen", "seqpairs", "--out", data, "--n-pairs", 4, "--steps", 3, "--seed", 5)
        invoke_json(runner, "train", "sequential", data, "--out", tmp_path / name, "--epochs", 2,
                    "--hidden-dim", 3, "--seed", 5)
        outputs.append(tmp_path / name)
    for filename in ("report.json", "model.bin", "loss_curve.csv"):
        assert (outputs[0] / filename).read_bytes() == (outputs[1] / filename).read_bytes()


def test_command_line_beats_config_file(runner, tmp_path, sequential_run):
    data, _ = sequential_run
    config = tmp_path / "train.json"
    config.write_text(json.dumps({"epochs": 1, "hidden_dim": 3}), encoding="utf-8")
    invoke_json(runner, "train", "sequential", data, "--out", tmp_path / "m", "--config", config, "--epochs", 2)
    report = json.loads((tmp_path / "m" / "report.json").read_text(encoding="utf-8"))
    assert report["config"]["epochs"] == 2
    assert report["config"]["hidden_dim"] == 3


def test_bad_config_exits_with_usage_code(runner, tmp_path, sequential_run):
    data, _ = sequential_run
    config = tmp_path / "train.json"
    config.write_text(json.dumps({"epochs": 1, "momentum": 0.9}), encoding="utf-8")
    result = invoke(runner, "train", "sequential", data, "--out", tmp_path / "m", "--config", config)
    assert result.exit_code == 2


def test_train_rejects_the_wrong_dataset_kind(runner, tmp_path, classifier_run):
    data, _ = classifier_run
    assert invoke(runner, "train", "sequential", data, "--out", tmp_path / "m").exit_code == 2


def test_eval_sequential(runner, sequential_run):
    data, model = sequential_run
    shown = invoke_json(runner, "eval", model, data)
    assert shown["n"] == 6
    assert shown["mse"] >= 0


def test_eval_classifier_defaults_to_test_split(runner, tmp_path, classifier_run):
    data, model = classifier_run
    shown = invoke_json(runner, "eval", model, data, "--report", tmp_path / "eval.json")
    assert shown["split"] == "test"
    assert shown["n"] == 4
    assert json.loads((tmp_path / "eval.json").read_text(encoding="utf-8"))["metrics"]["n"] == 4


def test_eval_table_output(runner, sequential_run):
    data, model = sequential_run
    result = invoke(runner, "eval", model, data)
    assert result.exit_code == 0
    assert "MSE" in result.output


def test_malformed_model_file(runner, tmp_path, sequential_run):
    data, _ = sequential_run
    (tmp_path / "broken.bin").write_bytes(b"not a model")
    assert invoke(runner, "eval", tmp_path / "broken.bin", data).exit_code == 2


def test_missing_dataset(runner, tmp_path, sequential_run):
    _, model = sequential_run
    assert invoke(runner, "eval", model, tmp_path / "nowhere").exit_code == 2


def test_model_and_dataset_kinds_must_match(runner, sequential_run, classifier_run):
    _, sequential_model = sequential_run
    corpus, _ = classifier_run
    assert invoke(runner, "eval", sequential_model, corpus).exit_code == 2


def test_attack_fgsm_sequential(runner, tmp_path, sequential_run):
    data, model = sequential_run
    out = tmp_path / "fgsm"
    summary = invoke_json(runner, "attack", "fgsm", model, data, "--out", out, "--epsilon", 0.05, "--limit", 3)
    assert summary["n"] == 3
    assert summary["mean_perturbation_norm"] <= 0.05 + 1e-12
    assert sorted(path.name for path in (out / "inputs").iterdir()) == [
        "input_0000.json", "input_0001.json", "input_0002.json"]
    rows = list(csv.reader((out / "summary.csv").open(encoding="utf-8")))
    assert rows[0][0] == "input"
    assert rows[-1][0] == "mean"
    report = json.loads((out / "inputs" / "input_0000.json").read_text(encoding="utf-8"))
    assert report["command"] == "attack fgsm"
    assert report["config"]["epsilon"] == 0.05


def test_attack_seqtarget(runner, tmp_path, sequential_run):
    data, model = sequential_run
    out = tmp_path / "seqtarget"
    summary = invoke_json(runner, "attack", "seqtarget", model, data, "--out", out,
                          "--target", "2:0:+", "--target", "3:1:current", "--limit", 2)
    assert summary["n"] == 2
    saved = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert saved["config"]["targets"][1] == {"step": 3, "coord": 1, "current": True}


def test_seqtarget_default_targets_need_long_sequences(runner, tmp_path, sequential_run):
    data, model = sequential_run
    assert invoke(runner, "attack", "seqtarget", model, data, "--out", tmp_path / "x").exit_code == 2


def test_attack_wordswap(runner, tmp_path, classifier_run):
    data, model = classifier_run
    out = tmp_path / "wordswap"
    summary = invoke_json(runner, "attack", "wordswap", model, data, "--out", out, "--all", "--limit", 3)
    assert summary["n"] == 3
    assert "audit" in summary
    assert 0 <= summary["mean_changed_fraction"] <= 0.25
    report = json.loads((out / "inputs" / "input_0002.json").read_text(encoding="utf-8"))
    assert set(report) >= {"original_text", "adversarial_text", "label", "outcome"}


def test_attack_fgsm_classifier_needs_embedded(runner, tmp_path, classifier_run):
    data, model = classifier_run
    result = invoke(runner, "attack", "fgsm", model, data, "--out", tmp_path / "f", "--all", "--limit", 2)
    assert result.exit_code == 2
    assert "--embedded" in result.output
    assert not (tmp_path / "f").exists()


def test_attack_fgsm_classifier_embedded(runner, tmp_path, classifier_run):
    data, model = classifier_run
    summary = invoke_json(runner, "attack", "fgsm", model, data, "--out", tmp_path / "f", "--all", "--limit", 2,
                          "--embedded")
    assert summary["n"] == 2
    report = json.loads((tmp_path / "f" / "inputs" / "input_0000.json").read_text(encoding="utf-8"))
    assert report["config"]["embedded"] is True


def test_attack_fgsm_workers_match_in_process_run(runner, tmp_path, sequential_run):
    data, model = sequential_run
    single = invoke_json(runner, "attack", "fgsm", model, data, "--out", tmp_path / "one", "--limit", 4)
    pooled = invoke_json(runner, "attack", "fgsm", model, data, "--out", tmp_path / "two", "--limit", 4,
                         "--jobs", 2)
    assert pooled == single
    assert (tmp_path / "one" / "summary.csv").read_bytes() == (tmp_path / "two" / "summary.csv").read_bytes()


def test_seqtarget_out_of_range_targets_with_workers(runner, tmp_path, sequential_run):
    data, model = sequential_run
    result = invoke(runner, "attack", "seqtarget", model, data, "--out", tmp_path / "x", "--jobs", 2)
    assert result.exit_code == 2
    assert "outside a 4x2 output" in result.output


def test_attack_rejects_a_dataset_of_another_width(runner, tmp_path, sequential_run):
    _, model = sequential_run
    wide = tmp_path / "wide"
    invoke_json(runner, "gen", "seqpairs", "--out", wide, "--n-pairs", 3, "--steps", 4, "--input-dim", 4,
                "--output-dim", 2)
    for jobs in (1, 2):
        result = invoke(runner, "attack", "fgsm", model, wide, "--out", tmp_path / f"w{jobs}", "--jobs", jobs)
        assert result.exit_code == 2
        assert "4 to 2" in result.output
    assert invoke(runner, "eval", model, wide).exit_code == 2


def test_wordswap_needs_a_classifier(runner, tmp_path, sequential_run):
    data, model = sequential_run
    assert invoke(runner, "attack", "wordswap", model, data, "--out", tmp_path / "w").exit_code == 2


def read_jacobian(path):
    with open(path, encoding="utf-8", newline="") as handle:
        return list(csv.reader(handle))


def test_jacobian_dump_is_causal(runner, tmp_path, sequential_run):
    _, model = sequential_run
    shown = invoke_json(runner, "jacobian", model, "--steps", 3, "--out", tmp_path / "j.csv")
    assert shown["shape"] == [3, 3, 2, 3]
    rows = read_jacobian(tmp_path / "j.csv")
    assert rows[0] == ["", "y0[0]", "y0[1]", "y1[0]", "y1[1]", "y2[0]", "y2[1]"]
    assert [row[0] for row in rows[1:]] == [f"x{i}[{a}]" for i in range(3) for a in range(3)]
    for row in rows[1 + 2 * 3:]:
        assert row[1:5] == ["0.0"] * 4


def test_jacobian_matches_finite_differences(runner, tmp_path, sequential_run):
    data, model = sequential_run
    invoke_json(runner, "jacobian", model, "--data", data, "--pair", 1, "--out", tmp_path / "exact.csv")
    invoke_json(runner, "jacobian", model, "--data", data, "--pair", 1, "--finite-diff", "--out", tmp_path / "fd.csv")
    exact = np.array([row[1:] for row in read_jacobian(tmp_path / "exact.csv")[1:]], dtype=float)
    numeric = np.array([row[1:] for row in read_jacobian(tmp_path / "fd.csv")[1:]], dtype=float)
    np.testing.assert_allclose(exact, numeric, rtol=1e-4, atol=1e-7)


def test_jacobian_of_classifier(runner, tmp_path, classifier_run):
    data, model = classifier_run
    shown = invoke_json(runner, "jacobian", model, "--data", data, "--item", 0, "--out", tmp_path / "j.csv")
    assert shown["shape"][1:] == [1, 2, 4]


def test_jacobian_needs_an_input(runner, tmp_path, sequential_run):
    _, model = sequential_run
    assert invoke(runner, "jacobian", model, "--out", tmp_path / "j.csv").exit_code == 2


def test_parse_target():
    assert parse_target(None, None, ("5:0:+", "8:2:-0.5", "1:1:current")) == [
        {"step": 5, "coord": 0, "direction": 1},
        {"step": 8, "coord": 2, "value": -0.5},
        {"step": 1, "coord": 1, "current": True},
    ]
    assert parse_target(None, None, ()) is None
    with pytest.raises(click.BadParameter):
        parse_target(None, None, ("5:0",))


def test_resolve_targets():
    outputs = np.array([[0.1, 0.2], [0.3, 0.4]])
    resolved = resolve_targets([{"step": 1, "coord": 0, "current": True}, {"step": 0, "coord": 1, "direction": -1}],
                               outputs)
    assert resolved == [{"step": 1, "coord": 0, "value": 0.3}, {"step": 0, "coord": 1, "direction": -1}]
