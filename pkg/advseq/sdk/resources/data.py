""" Embedding dictionaries, corpora, synthetic generators and their on-disk formats. """
import csv
import json
import re
from collections import Counter
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple, Union

import numpy as np
from dirhash import dirhash
from pydantic import BaseModel, PrivateAttr, ValidationError, validator

from advseq.sdk.exceptions import (ConfigurationError, DatasetIOError,
                                   InputError)
from advseq.sdk.linalg import DTYPE, Rng, normal_sample
from advseq.sdk.logs import get_logger
from advseq.sdk.resources.base_models import (CorpusConfig, CorrelationLink,
                                              SeqPairConfig)
from advseq.sdk.resources.models import OOV_TOKEN, as_tokens


logger = get_logger(__name__)

OOV_WORD = "<unk>"
POSITIVE_PREFIX = "pos"
NEGATIVE_PREFIX = "neg"
FILLER_PREFIX = "word"

# the literal OOV keyword is one token so detokenized text maps back to id 0
TOKEN_PATTERN = re.compile(re.escape(OOV_WORD) + r"|[\w']+")

DICTIONARY_FILE = "dictionary.txt"
TRAIN_FILE = "train.tsv"
TEST_FILE = "test.tsv"
PAIRS_FILE = "pairs.csv"
METADATA_FILE = "metadata.json"

PAIR_COLUMNS = ["pair_id", "step", "role", "coord", "value"]

PathLike = Union[str, Path]


class EmbeddingDictionary(BaseModel):
    """ Word <-> token id <-> embedding row. Id 0 is the out-of-vocabulary keyword. """

    words:      List[str]
    vectors:    np.ndarray
    _ids:       Dict[str, int] = PrivateAttr(default_factory=dict)

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    def __init__(self, **data):
        super().__init__(**data)
        self._ids = {word: index for index, word in enumerate(self.words)}

    @validator("words")
    def _check_words(cls, words):  # pylint: disable=E0213
        if len(words) < 2:
            raise ValueError("a dictionary needs at least 2 entries")
        if words[0] != OOV_WORD:
            raise ValueError(f"id 0 must be the reserved keyword {OOV_WORD!r}")
        if len(set(words)) != len(words):
            raise ValueError("dictionary words must be unique")
        return words

    @validator("vectors", pre=True)
    def _check_vectors(cls, vectors, values):  # pylint: disable=E0213
        vectors = np.array(vectors, dtype=DTYPE, copy=True)
        if vectors.ndim != 2 or not np.all(np.isfinite(vectors)):
            raise ValueError("vectors must be a finite 2-D matrix")
        words = values.get("words")
        if words is not None and vectors.shape[0] != len(words):
            raise ValueError(f"{len(words)} words but {vectors.shape[0]} embedding rows")
        vectors.setflags(write=False)
        return vectors

    @property
    def vocab_size(self) -> int:
        return len(self.words)

    @property
    def embed_dim(self) -> int:
        return self.vectors.shape[1]

    def id_of(self, word: str) -> int:
        return self._ids.get(word, OOV_TOKEN)

    def word_of(self, token: int) -> str:
        return self.words[token]

    def with_vectors(self, vectors) -> "EmbeddingDictionary":
        """ Same words, new embeddings (e.g. trained ones). """
        return EmbeddingDictionary(words=self.words, vectors=vectors)

    def cue_ids(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """ (positive cue ids, negative cue ids, filler ids) of a synthetic dictionary. """
        groups = {POSITIVE_PREFIX: [], NEGATIVE_PREFIX: [], FILLER_PREFIX: []}
        for token, word in enumerate(self.words[1:], start=1):
            for prefix, members in groups.items():
                if word.startswith(prefix) and word[len(prefix):].isdigit():
                    members.append(token)
        return tuple(np.array(groups[key], dtype=np.int64)
                     for key in (POSITIVE_PREFIX, NEGATIVE_PREFIX, FILLER_PREFIX))


class LabeledCorpus(BaseModel):
    """ Token sequences with binary sentiment labels. """

    sequences:  List[np.ndarray]
    labels:     List[int]
    split:      str = "train"

    class Config:
        arbitrary_types_allowed = True

    @validator("labels", each_item=True)
    def _binary(cls, label):  # pylint: disable=E0213
        if label not in (0, 1):
            raise ValueError(f"labels must be 0 or 1, got {label}")
        return label

    @validator("labels")
    def _aligned(cls, labels, values):  # pylint: disable=E0213
        sequences = values.get("sequences", [])
        if len(labels) != len(sequences):
            raise ValueError("one label per sequence is required")
        if any(len(sequence) == 0 for sequence in sequences):
            raise ValueError("sequences must be non-empty")
        return labels

    def __len__(self) -> int:
        return len(self.labels)

    def items(self) -> Iterator[Tuple[np.ndarray, int]]:
        return zip(self.sequences, self.labels)


class SeqPairSet(BaseModel):
    """ Input/output sequence pairs plus the correlation map used to build them. """

    inputs:     np.ndarray      # (n, t, input_dim)
    outputs:    np.ndarray      # (n, t, output_dim)
    links:      List[CorrelationLink] = []
    seed:       Optional[int] = None

    class Config:
        arbitrary_types_allowed = True

    @validator("outputs")
    def _aligned(cls, outputs, values):  # pylint: disable=E0213
        inputs = values.get("inputs")
        if inputs is None or inputs.ndim != 3 or outputs.ndim != 3 or inputs.shape[:2] != outputs.shape[:2]:
            raise ValueError("inputs and outputs must be (n, t, width) arrays with matching n and t")
        return outputs

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @property
    def pairs(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        return list(zip(self.inputs, self.outputs))


def tokenize(text: str, dictionary: EmbeddingDictionary) -> np.ndarray:
    """
    Lowercase, split on whitespace and punctuation, and map words to ids.

    Raises:
        InputError: when no word remains.

    Returns:
        Token ids, unknown words and the literal <unk> mapped to 0.
    """
    words = [word.strip("'") for word in TOKEN_PATTERN.findall(text.lower())]
    words = [word for word in words if word]
    if not words:
        raise InputError(f"No words in text {text!r}")
    return np.array([dictionary.id_of(word) for word in words], dtype=np.int64)


def detokenize(tokens, dictionary: EmbeddingDictionary) -> str:
    tokens = as_tokens(tokens, dictionary.vocab_size)
    return " ".join(dictionary.word_of(int(token)) for token in tokens)


def synthetic_dictionary(rng: Rng, vocab_size: int, embed_dim: int) -> EmbeddingDictionary:
    """ <unk>, positive cues, negative cues, then neutral filler, with N(0, 1) embeddings. """
    if vocab_size < 20:
        raise ConfigurationError(f"vocab_size must be >= 20, got {vocab_size}")
    if embed_dim < 1:
        raise ConfigurationError(f"embed_dim must be >= 1, got {embed_dim}")
    n_cues = max(2, vocab_size // 20)
    n_filler = vocab_size - 1 - 2 * n_cues
    words = [OOV_WORD]
    words += [f"{POSITIVE_PREFIX}{index:03d}" for index in range(n_cues)]
    words += [f"{NEGATIVE_PREFIX}{index:03d}" for index in range(n_cues)]
    words += [f"{FILLER_PREFIX}{index:04d}" for index in range(n_filler)]
    vectors = normal_sample(rng, 0.0, 1.0, (vocab_size, embed_dim))
    return EmbeddingDictionary(words=words, vectors=vectors)


def sample_sentences(
    rng: Rng,
    dictionary: EmbeddingDictionary,
    n_items: int,
    len_range: Tuple[int, int],
    split: str = "train",
) -> LabeledCorpus:
    """
    Draw labelled sentences from a synthetic dictionary.

    Each sentence is filler words with exactly one cue word of its own class
    at a random position. The first ceil(n/2) labels are positive, then the
    order is shuffled.
    """
    low, high = len_range
    if n_items < 1 or low < 1 or low > high:
        raise ConfigurationError(f"Infeasible corpus parameters n_items={n_items}, len_range={len_range}")
    positive, negative, filler = dictionary.cue_ids()
    if not (positive.size and negative.size and filler.size):
        raise ConfigurationError("Dictionary has no cue/filler structure to sample from")

    labels = np.array([1] * ((n_items + 1) // 2) + [0] * (n_items // 2))[rng.permutation(n_items)]
    sequences = []
    for label in labels:
        length = int(rng.integers(low, high + 1))
        tokens = filler[rng.integers(0, filler.size, length)]
        cues = positive if label == 1 else negative
        tokens[int(rng.integers(0, length))] = cues[int(rng.integers(0, cues.size))]
        sequences.append(tokens)
    return LabeledCorpus(sequences=sequences, labels=[int(label) for label in labels], split=split)


def generate_synthetic_corpus(
    rng: Rng,
    vocab_size: int,
    n_items: int,
    len_range: Tuple[int, int],
    embed_dim: int = 16,
) -> Tuple[LabeledCorpus, EmbeddingDictionary]:
    """
    Desk-scale stand-in for a sentiment review corpus.

    Raises:
        ConfigurationError: on infeasible parameters.

    Returns:
        (corpus, dictionary); identical for identical rng seeds.
    """
    dictionary = synthetic_dictionary(rng, vocab_size, embed_dim)
    corpus = sample_sentences(rng, dictionary, n_items, len_range)
    return corpus, dictionary


def generate_correlated_pairs(rng: Rng, n_pairs: int, config: Optional[SeqPairConfig] = None) -> SeqPairSet:
    """
    Noise sequences where each output coordinate copies an earlier input coordinate.

    Inputs ~ N(0, input_sigma2), outputs ~ N(0, output_sigma2); then each output
    coordinate c gets a distinct source input coordinate and a lag in {1, 2}, and
    output[j][c] += alpha * input[j - lag][source] wherever j - lag is a valid step.
    """
    config = (config or SeqPairConfig()).copy(update={"n_pairs": n_pairs})
    if n_pairs < 1:
        raise ConfigurationError(f"n_pairs must be >= 1, got {n_pairs}")
    steps = config.steps
    inputs = normal_sample(rng, 0.0, config.input_sigma2, (n_pairs, steps, config.input_dim))
    outputs = normal_sample(rng, 0.0, config.output_sigma2, (n_pairs, steps, config.output_dim))
    sources = rng.permutation(config.input_dim)[:config.output_dim]
    lags = rng.integers(1, 3, config.output_dim)
    links = []
    for coord, (source, lag) in enumerate(zip(sources, lags)):
        source, lag = int(source), int(lag)
        if lag < steps:
            outputs[:, lag:, coord] += config.alpha * inputs[:, :steps - lag, source]
        links.append(CorrelationLink(coord=coord, source=source, lag=lag, alpha=config.alpha))
    return SeqPairSet(inputs=inputs, outputs=outputs, links=links, seed=rng.seed)


def build_dictionary(texts: List[str], rng: Rng, vocab_size: int, embed_dim: int) -> EmbeddingDictionary:
    """ Keep the vocab_size - 1 most frequent words (ties alphabetical) of a real corpus. """
    counts = Counter()
    for text in texts:
        counts.update(word.strip("'") for word in TOKEN_PATTERN.findall(text.lower()))
    counts.pop("", None)
    counts.pop(OOV_WORD, None)
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    words = [OOV_WORD] + [word for word, _ in ranked[:vocab_size - 1]]
    if len(words) < 2:
        raise InputError("Corpus has no words to build a dictionary from")
    vectors = normal_sample(rng, 0.0, 1.0, (len(words), embed_dim))
    return EmbeddingDictionary(words=words, vectors=vectors)


# Files

@contextmanager
def _reading(path: Path):
    """ Map filesystem errors on reads: missing -> InputError, other -> DatasetIOError. """
    try:
        yield
    except FileNotFoundError as exc:
        raise InputError(f"{path} does not exist.") from exc
    except UnicodeDecodeError as exc:
        raise InputError(f"{path} is not valid UTF-8 - {exc}") from exc
    except OSError as exc:
        raise DatasetIOError(f"Could not read {path} - {exc}") from exc


@contextmanager
def _writing(path: Path):
    try:
        yield
    except OSError as exc:
        raise DatasetIOError(f"Could not write {path} - {exc}") from exc
    logger.info(f"Wrote {path}")


def write_json(path: PathLike, data) -> None:
    """ Deterministic JSON (sorted keys, fixed indent). """
    path = Path(path)
    with _writing(path):
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_json(path: PathLike) -> dict:
    path = Path(path)
    with _reading(path):
        text = path.read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON - {exc}") from exc


def write_dictionary(path: PathLike, dictionary: EmbeddingDictionary, fmt: str = "csv") -> None:
    """
    Header `vocab_size embed_dim fmt`, one `word id` line per entry, then the
    embedding matrix as CSV rows or raw little-endian float64.
    """
    if fmt not in ("csv", "binary"):
        raise ConfigurationError(f"Unknown dictionary format {fmt!r}")
    path = Path(path)
    header = [f"{dictionary.vocab_size} {dictionary.embed_dim} {fmt}"]
    header += [f"{word} {token}" for token, word in enumerate(dictionary.words)]
    payload = "\n".join(header) + "\n"
    with _writing(path):
        if fmt == "csv":
            rows = [",".join(repr(float(value)) for value in row) for row in dictionary.vectors]
            path.write_text(payload + "\n".join(rows) + "\n", encoding="utf-8")
        else:
            path.write_bytes(payload.encode("utf-8") + dictionary.vectors.astype("<f8").tobytes())


def read_dictionary(path: PathLike) -> EmbeddingDictionary:
    path = Path(path)
    with _reading(path):
        raw = path.read_bytes()
    try:
        header, _, rest = raw.partition(b"\n")
        vocab_size, embed_dim, fmt = header.decode("utf-8").split()
        vocab_size, embed_dim = int(vocab_size), int(embed_dim)
        parts = rest.split(b"\n", vocab_size)
        words = [None] * vocab_size
        for line in parts[:vocab_size]:
            word, token = line.decode("utf-8").rsplit(" ", 1)
            words[int(token)] = word
        payload = parts[vocab_size] if len(parts) > vocab_size else b""
        if fmt == "csv":
            rows = [row for row in payload.decode("utf-8").splitlines() if row]
            vectors = np.array([[float(value) for value in row.split(",")] for row in rows])
        elif fmt == "binary":
            vectors = np.frombuffer(payload, dtype="<f8").reshape(vocab_size, embed_dim)
        else:
            raise ValueError(f"unknown format flag {fmt!r}")
        return EmbeddingDictionary(words=words, vectors=vectors.reshape(vocab_size, embed_dim))
    except (ValueError, IndexError, UnicodeDecodeError, ValidationError) as exc:
        raise InputError(f"Malformed dictionary file {path} - {exc}") from exc


def read_labeled_texts(path: PathLike) -> List[Tuple[int, str]]:
    """ Parse `label<TAB>text` lines (labels 0/1). Blank lines are skipped. """
    path = Path(path)
    with _reading(path):
        lines = path.read_text(encoding="utf-8").splitlines()
    items = []
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        label, sep, text = line.partition("\t")
        if not sep or label.strip() not in ("0", "1"):
            raise InputError(f"{path}:{number}: expected 'label<TAB>text' with label 0 or 1")
        items.append((int(label), text))
    return items


def read_corpus(path: PathLike, dictionary: EmbeddingDictionary, split: str = "train") -> LabeledCorpus:
    items = read_labeled_texts(path)
    sequences, labels = [], []
    for label, text in items:
        sequences.append(tokenize(text, dictionary))
        labels.append(label)
    if not sequences:
        raise InputError(f"{path} contains no examples")
    return LabeledCorpus(sequences=sequences, labels=labels, split=split)


def write_corpus(path: PathLike, corpus: LabeledCorpus, dictionary: EmbeddingDictionary) -> None:
    path = Path(path)
    lines = [f"{label}\t{detokenize(tokens, dictionary)}" for tokens, label in corpus.items()]
    with _writing(path):
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_pairs(path: PathLike, pairs: SeqPairSet) -> None:
    """ Long-format CSV: pair_id, step, role (in/out), coord, value. """
    path = Path(path)
    with _writing(path), open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(PAIR_COLUMNS)
        for pair_id, (inputs, outputs) in enumerate(pairs.pairs):
            for role, sequence in (("in", inputs), ("out", outputs)):
                for step, row in enumerate(sequence):
                    for coord, value in enumerate(row):
                        writer.writerow([pair_id, step, role, coord, repr(float(value))])


def read_pairs(path: PathLike) -> Tuple[np.ndarray, np.ndarray]:
    path = Path(path)
    with _reading(path), open(path, "r", encoding="utf-8", newline="") as handle:
        rows = list(csv.DictReader(handle))
    try:
        cells = {"in": {}, "out": {}}
        for row in rows:
            key = (int(row["pair_id"]), int(row["step"]), int(row["coord"]))
            cells[row["role"]][key] = float(row["value"])
        arrays = []
        for role in ("in", "out"):
            keys = cells[role]
            n, t, width = (max(key[axis] for key in keys) + 1 for axis in range(3))
            array = np.full((n, t, width), np.nan)
            for (pair_id, step, coord), value in keys.items():
                array[pair_id, step, coord] = value
            if np.isnan(array).any():
                raise ValueError(f"missing '{role}' cells")
            arrays.append(array)
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"Malformed pair file {path} - {exc}") from exc
    return arrays[0], arrays[1]


def dataset_hash(directory: PathLike) -> Optional[str]:
    """ sha1 over the dataset's metadata file, None when it has none. """
    if not (Path(directory) / METADATA_FILE).is_file():
        return None
    return dirhash(str(directory), "sha1", match=[METADATA_FILE])


def save_corpus_dataset(
    directory: PathLike,
    dictionary: EmbeddingDictionary,
    train: LabeledCorpus,
    test: Optional[LabeledCorpus],
    metadata: dict,
    fmt: str = "csv",
) -> List[Path]:
    directory = Path(directory)
    with _writing(directory):
        directory.mkdir(parents=True, exist_ok=True)
    written = [directory / DICTIONARY_FILE, directory / TRAIN_FILE]
    write_dictionary(written[0], dictionary, fmt)
    write_corpus(written[1], train, dictionary)
    if test is not None and len(test):
        written.append(directory / TEST_FILE)
        write_corpus(written[-1], test, dictionary)
    written.append(directory / METADATA_FILE)
    write_json(written[-1], {"kind": "corpus", **metadata})
    return written


def load_corpus_dataset(
    directory: PathLike,
    rng: Optional[Rng] = None,
    corpus_config: Optional[CorpusConfig] = None,
    dictionary: Optional[EmbeddingDictionary] = None,
) -> Tuple[EmbeddingDictionary, LabeledCorpus, Optional[LabeledCorpus]]:
    """
    Load a corpus directory. A given dictionary wins over the directory's own;
    without either (a real review corpus) one is built from the training texts
    with the given rng and config.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise InputError(f"{directory} is not a dataset directory.")
    dictionary_path = directory / DICTIONARY_FILE
    if dictionary is None and dictionary_path.exists():
        dictionary = read_dictionary(dictionary_path)
    elif dictionary is None:
        config = corpus_config or CorpusConfig()
        texts = [text for _, text in read_labeled_texts(directory / TRAIN_FILE)]
        dictionary = build_dictionary(texts, rng or Rng(0), config.vocab_size, config.embed_dim)
        logger.info(f"Built a {dictionary.vocab_size}-word dictionary from {directory / TRAIN_FILE}")
    train = read_corpus(directory / TRAIN_FILE, dictionary, "train")
    test = read_corpus(directory / TEST_FILE, dictionary, "test") if (directory / TEST_FILE).exists() else None
    return dictionary, train, test


def save_pairs_dataset(directory: PathLike, pairs: SeqPairSet, metadata: dict) -> List[Path]:
    directory = Path(directory)
    with _writing(directory):
        directory.mkdir(parents=True, exist_ok=True)
    written = [directory / PAIRS_FILE, directory / METADATA_FILE]
    write_pairs(written[0], pairs)
    write_json(written[1], {
        "kind": "seqpairs",
        "links": [link.dict() for link in pairs.links],
        "seed": pairs.seed,
        **metadata,
    })
    return written


def load_pairs_dataset(directory: PathLike) -> SeqPairSet:
    directory = Path(directory)
    if not directory.is_dir():
        raise InputError(f"{directory} is not a dataset directory.")
    inputs, outputs = read_pairs(directory / PAIRS_FILE)
    metadata = read_json(directory / METADATA_FILE) if (directory / METADATA_FILE).exists() else {}
    links = [CorrelationLink(**link) for link in metadata.get("links", [])]
    return SeqPairSet(inputs=inputs, outputs=outputs, links=links, seed=metadata.get("seed"))


def dataset_kind(directory: PathLike) -> str:
    """ 'corpus' or 'seqpairs', from metadata or, failing that, the files present. """
    directory = Path(directory)
    metadata_path = directory / METADATA_FILE
    if metadata_path.exists():
        kind = read_json(metadata_path).get("kind")
        if kind in ("corpus", "seqpairs"):
            return kind
    if (directory / PAIRS_FILE).exists():
        return "seqpairs"
    if (directory / TRAIN_FILE).exists():
        return "corpus"
    raise InputError(f"{directory} is not a dataset directory.")


def write_csv(path: PathLike, header: List[str], rows) -> None:
    path = Path(path)
    with _writing(path), open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
