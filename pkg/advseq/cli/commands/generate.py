"""
    CLI commands generating synthetic datasets.
"""
from typing import Optional

import click

from advseq import __version__
from advseq.cli.display import handle_output, output_option
from advseq.cli.utils import (config_option, handle_errors, names, pick,
                              seed_option)
from advseq.common.config import load_run_config, merge_config
from advseq.sdk.linalg import Rng
from advseq.sdk.resources.base_models import CorpusConfig, SeqPairConfig
from advseq.sdk.resources.data import (dataset_hash, generate_correlated_pairs,
                                       generate_synthetic_corpus,
                                       sample_sentences, save_corpus_dataset,
                                       save_pairs_dataset)


@click.group("gen")
def commands():
    """
    Generate synthetic datasets
    """


@commands.command("corpus")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False), help="Dataset directory to write.")
@click.option("--vocab-size", type=int, default=None, help="Dictionary size, <unk> included. [default: 500]")
@click.option("--embed-dim", type=int, default=None, help="Embedding width. [default: 16]")
@click.option("--n-items", type=int, default=None, help="Training sentences. [default: 200]")
@click.option("--n-test", type=int, default=None, help="Test sentences. [default: 50]")
@click.option("--min-len", type=int, default=None, help="Shortest sentence. [default: 8]")
@click.option("--max-len", type=int, default=None, help="Longest sentence. [default: 20]")
@click.option("--format", "fmt", type=click.Choice(["csv", "binary"]), default=None,
              help="Embedding matrix encoding in dictionary.txt. [default: csv]")
@seed_option
@config_option
@output_option
@handle_errors
def corpus(out_dir: str, seed: Optional[int], config_path: Optional[str], output: str, fmt: Optional[str], **options):
    """
    Synthetic sentiment corpus with cue words

    Writes train.tsv, test.tsv, dictionary.txt and metadata.json to --out.

    \f
    Args:
        out_dir: dataset directory.
        seed: run seed.
        config_path: optional JSON run config.
        output: display format.
        fmt: dictionary matrix encoding.
        options: CorpusConfig overrides.
    """
    settings = merge_config(
        {"seed": 0, "format": "csv"},
        load_run_config(config_path, "gen corpus"),
        {"seed": seed, "format": fmt, **options},
    )
    config = CorpusConfig(**pick(settings, CorpusConfig.__fields__))
    rng = Rng(settings["seed"])

    train, dictionary = generate_synthetic_corpus(
        rng.derive("corpus"), config.vocab_size, config.n_items, config.len_range, config.embed_dim
    )
    test = None
    if config.n_test:
        test = sample_sentences(rng.derive("corpus-test"), dictionary, config.n_test, config.len_range, "test")
    metadata = {
        "artifact_version": __version__,
        "config": config.dict(),
        "format": settings["format"],
        "seed": settings["seed"],
    }
    written = save_corpus_dataset(out_dir, dictionary, train, test, metadata, settings["format"])
    handle_output(
        {"kind": "corpus", "directory": out_dir, "files": names(written), "dataset_hash": dataset_hash(out_dir)},
        output, "gen",
    )


@commands.command("seqpairs")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False), help="Dataset directory to write.")
@click.option("--n-pairs", type=int, default=None, help="Number of sequence pairs. [default: 100]")
@click.option("--steps", type=int, default=None, help="Sequence length. [default: 10]")
@click.option("--input-dim", type=int, default=None, help="Input width. [default: 5]")
@click.option("--output-dim", type=int, default=None, help="Output width. [default: 3]")
@click.option("--alpha", type=float, default=None, help="Correlation strength. [default: 1.0]")
@seed_option
@config_option
@output_option
@handle_errors
def seqpairs(out_dir: str, seed: Optional[int], config_path: Optional[str], output: str, **options):
    """
    Noise sequence pairs with lagged input/output correlations

    Writes pairs.csv and metadata.json (with the correlation map) to --out.

    \f
    Args:
        out_dir: dataset directory.
        seed: run seed.
        config_path: optional JSON run config.
        output: display format.
        options: SeqPairConfig overrides.
    """
    settings = merge_config({"seed": 0}, load_run_config(config_path, "gen seqpairs"), {"seed": seed, **options})
    config = SeqPairConfig(**pick(settings, SeqPairConfig.__fields__))
    pairs = generate_correlated_pairs(Rng(settings["seed"]).derive("seqpairs"), config.n_pairs, config)
    metadata = {"artifact_version": __version__, "config": config.dict(), "run_seed": settings["seed"]}
    written = save_pairs_dataset(out_dir, pairs, metadata)
    handle_output(
        {"kind": "seqpairs", "directory": out_dir, "files": names(written), "dataset_hash": dataset_hash(out_dir)},
        output, "gen",
    )


if __name__ == "__main__":
    commands()  # pylint: disable=E1120
